import sys

from skipfree.controller import Controller

# Get the one and only Controller instance and run one command
sys.exit(Controller.get_instance().start())
