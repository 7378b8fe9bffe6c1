#![no_main]

use helprank::recommend::{read_model, write_model};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(m) = read_model(data) {
        let mut buf = Vec::new();
        write_model(&m, &mut buf).expect("write to memory");
        let again = read_model(&buf[..]).expect("written model reads back");
        assert_eq!(again.users, m.users);
        assert_eq!(again.items, m.items);
    }
});
