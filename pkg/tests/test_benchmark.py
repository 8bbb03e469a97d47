import pytest

from skipfree.helpers.benchmark import CSV_HEADER, BenchmarkRow, benchmark_queue



def test_row_csv():
    row = BenchmarkRow(K=2, M=3, states=15, skip_free_s=2e-4, rvi_s=1e-4)
    assert row.ratio == pytest.approx(2.0)
    assert row.to_csv().split(",")[:3] == ["2", "3", "15"]
    assert len(row.to_csv().split(",")) == len(CSV_HEADER.split(","))



@pytest.mark.slow
def test_iteration_cost_stays_within_a_constant_of_rvi():
    """ One skip-free iteration costs a bounded multiple of one RVI sweep as the queue grows """
    rows = benchmark_queue(K=2, M_values=range(5, 8), repeats=5)
    assert [row.states for row in rows] == [63, 127, 255]
    for row in rows:
        assert row.ratio <= 4.0
