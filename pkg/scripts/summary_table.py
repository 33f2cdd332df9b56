"""Print summary statistics for every dataset whose edge file is present,
next to the manifest's expected row."""
import argparse

from cidnet.datasets import available_datasets, load_bundled, load_manifest, summary_stats


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--data-dir", default=None)
    args = parser.parse_args()

    manifest = load_manifest(args.data_dir)
    present = set(available_datasets(args.data_dir))
    print(f"{'network':<16}{'nodes':>6}{'edges':>7}{'density':>9}{'recip':>7}  status")
    for name, desc in manifest.items():
        exp = desc.expected
        if name not in present:
            n, e, d, r = exp.formatted()
            print(f"{name:<16}{n:>6}{e:>7}{d:>9}{r:>7}  missing")
            continue
        got = summary_stats(load_bundled(name, args.data_dir))
        n, e, d, r = got.formatted()
        status = "ok" if got.matches(exp) else "MISMATCH"
        print(f"{name:<16}{n:>6}{e:>7}{d:>9}{r:>7}  {status}")


if __name__ == "__main__":
    main()
