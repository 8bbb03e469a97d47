
if __name__ == "__main__":
    import logging
    import sys
    from skipfree.helpers.benchmark import CSV_HEADER, benchmark_queue

    # usage: benchmark_queue.py [K] [M_min] [M_max] [repeats]
    args = [int(arg) for arg in sys.argv[1:]]
    K, M_min, M_max, repeats = args + [2, 3, 8, 5][len(args):]

    logging.basicConfig(level=logging.INFO, stream=sys.stderr)
    print(CSV_HEADER)
    for row in benchmark_queue(K=K, M_values=range(M_min, M_max + 1), repeats=repeats):
        print(row.to_csv())
