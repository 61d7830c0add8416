#![no_main]

use caplab::nonlinearity::NonlinearitySpec;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(parsed) = serde_json::from_slice::<NonlinearitySpec>(data) else { return };
    if let Ok(f) = parsed.build() {
        for s in [0.0, 0.5, 1.0, 2.0, 1e3] {
            let _ = f.eval(s);
            let _ = f.deriv(s);
        }
    }
});
