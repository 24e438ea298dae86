//! Generate the benchmark families at a few sizes and time both checkers.

use std::time::Duration;

use epiveri::bench::{run_bench, write_csv, Algo, BenchSpec, Family};

fn main() {
    let mut rows = vec![];
    for family in Family::ALL {
        let lo = family.min_size();
        for algo in [Algo::Ci, Algo::Baseline] {
            let b = BenchSpec {
                reps: 1,
                timeout: Duration::from_secs(10),
                ..BenchSpec::new(family, lo..lo + 2, algo)
            };
            rows.extend(run_bench(&b));
        }
    }
    write_csv(std::io::stdout(), &rows).unwrap();
}
