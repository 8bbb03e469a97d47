import json
import logging
import os

from skipfree.models.settings_definition import SettingsConstants, SettingsDefinition
from .singleton import Singleton


logger = logging.getLogger(__name__)



class Settings(Singleton):
    """
        Run-time configuration for a single process.

        Defaults come from `SettingsDefinition`; a json file named by `--settings` is
        layered on top and command line flags are applied last via `update()`. Nothing
        is read from the environment.
    """
    settings_filename: str = None

    @classmethod
    def get_instance(cls):
        # This is the only way to access the one and only instance
        if cls._instance is None:
            # Instantiate the one and only instance
            settings = cls.__new__(cls)
            cls._instance = settings

            settings._data = SettingsDefinition.get_defaults()

        return cls._instance


    def __str__(self):
        return json.dumps(self._data, indent=4)


    def load(self, filename: str):
        """ Reads a json settings file; missing entries keep their current value. """
        with open(filename) as settings_file:
            self.update(json.load(settings_file))
        self.settings_filename = filename
        logger.debug(f"Loaded settings from {filename}")


    def save(self, filename: str = None):
        filename = filename or self.settings_filename
        if not filename:
            raise Exception("No settings file to save to")
        with open(filename, 'w') as settings_file:
            json.dump(self._data, settings_file, indent=4)
            settings_file.flush()
            os.fsync(settings_file.fileno())


    def update(self, new_settings: dict):
        """
            Validates and applies each entry in `new_settings`. Keys that are not
            defined settings raise; `None` values are skipped so that unset command
            line flags don't clobber file or default values.
        """
        for attr_name, value in new_settings.items():
            entry = SettingsDefinition.get_settings_entry(attr_name)
            if entry is None:
                raise Exception(f"Setting for {attr_name} not found")
            if value is None:
                continue
            self._data[attr_name] = entry.clean(value)


    def set_value(self, attr_name: str, value: any):
        """
            Updates the attr's current value (after validating it).
        """
        if attr_name not in self._data:
            raise Exception(f"Setting for {attr_name} not found")
        self._data[attr_name] = SettingsDefinition.get_settings_entry(attr_name).clean(value)


    def get_value(self, attr_name: str):
        """
            Returns the attr's current value.
        """
        if attr_name not in self._data:
            raise Exception(f"Setting for {attr_name} not found")
        return self._data[attr_name]


    def get_value_display_name(self, attr_name: str) -> str:
        if attr_name not in self._data:
            raise Exception(f"Setting for {attr_name} not found")
        settings_entry = SettingsDefinition.get_settings_entry(attr_name)
        if settings_entry.type == SettingsConstants.TYPE__FREE_ENTRY:
            raise Exception(f"Unsupported SettingsEntry.type: {settings_entry.type}")
        return settings_entry.get_selection_option_display_name_by_value(value=self._data[attr_name])


    """
        Intentionally keeping the properties very limited; use:

        settings.get_value(SettingsConstants.SETTING__MY_SETTING_ATTR)
    """
    @property
    def debug(self) -> bool:
        return self._data[SettingsConstants.SETTING__DEBUG] == SettingsConstants.OPTION__ENABLED


    @property
    def communicating(self) -> bool:
        return self._data[SettingsConstants.SETTING__COMMUNICATING] == SettingsConstants.OPTION__ENABLED
