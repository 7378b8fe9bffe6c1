#![no_main]

use helprank::recommend::HelpfulnessWeights;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(w) = HelpfulnessWeights::read_csv(data) {
        assert!(w.iter().all(|(_, _, x)| (0.0..=1.0).contains(&x)));
    }
});
