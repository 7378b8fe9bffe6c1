#![no_main]

use helprank::features::FeatureMatrix;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = FeatureMatrix::read_csv(data);
});
