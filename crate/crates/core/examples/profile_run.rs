// Diagnostic driver for profiling a single algorithm run under valgrind or
// perf; not part of the library surface.
use bnsl_core::dataset::generate_synthetic;
use bnsl_core::dp_levelwise::RunOptions;

fn main() {
    let algo = std::env::args().nth(1).unwrap_or_else(|| "levelwise".into());
    let p: usize = std::env::args().nth(2).and_then(|v| v.parse().ok()).unwrap_or(14);
    let (d, _) = generate_synthetic(42, p, std::env::var("PROF_N").ok().and_then(|v| v.parse().ok()).unwrap_or(200), 2, 0.25).unwrap();
    let opts = RunOptions { workers: Some(1), ..Default::default() };
    match algo.as_str() {
        "baseline" => { bnsl_core::run_baseline(&d, &opts).unwrap(); }
        "qonly" => {
            use bnsl_core::score::{ScoreCounter, Scorer};
            use bnsl_core::subset_index::enumerate_level;
            let scorer = Scorer::new(&d);
            let counter = ScoreCounter::new();
            let mut acc = 0.0;
            for k in 1..=p {
                for s in enumerate_level(p, k).unwrap() {
                    acc += scorer.q_subset(s, &counter).unwrap();
                }
            }
            std::hint::black_box(acc);
        }
        _ => { bnsl_core::run(&d, &opts).unwrap(); }
    }
}
