#![no_main]

use libfuzzer_sys::fuzz_target;
use nholo_core::{parse, Dims};

fuzz_target!(|data: &[u8]| {
    let Some((&shape, rest)) = data.split_first() else { return };
    let Ok(src) = std::str::from_utf8(rest) else { return };
    let dims = Dims::new(1 + (shape & 3) as usize, 1 + ((shape >> 2) & 3) as usize).unwrap();
    let Ok(expr) = parse(src, dims) else { return };

    // the printed form must parse back to the same tree
    let printed = expr.to_string();
    let again = parse(&printed, dims).unwrap_or_else(|e| panic!("reparse of `{printed}` failed: {e}"));
    assert_eq!(printed, again.to_string());

    let point: Vec<f64> = (0..dims.total()).map(|k| 0.3 + 0.1 * k as f64).collect();
    if let (Ok(a), Ok(b)) = (expr.value_at(dims, &point), again.value_at(dims, &point)) {
        assert!(a == b || (a.is_nan() && b.is_nan()) || (a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }
    let _ = expr.evaluate_jet(dims, &point, 2);
});
