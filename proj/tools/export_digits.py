#!/usr/bin/env python3
"""Write the 1797-sample 8x8 digits set as CSV: 64 pixel columns then a label."""
import argparse
import csv

from sklearn.datasets import load_digits


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("out", help="destination CSV path")
    args = parser.parse_args()
    digits = load_digits()
    with open(args.out, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow([f"p{i}" for i in range(64)] + ["label"])
        for row, label in zip(digits.data.astype(int), digits.target):
            writer.writerow(list(row) + [int(label)])


if __name__ == "__main__":
    main()
