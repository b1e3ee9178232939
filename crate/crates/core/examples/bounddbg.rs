use mcm_core::bounds::*;
use std::time::Instant;
fn main() {
    let t0 = Instant::now();
    for beta in [0.0, 0.2, 0.3678, 0.5, 0.7, 0.9, 0.99, 1.0] {
        let q = BoundQuery { envelope_grid: 400, ..BoundQuery::new(beta, CMin::Asymptotic, 1.0) };
        let b = ac_lower_general(&q).unwrap();
        let h = hardness_upper(beta).unwrap();
        println!("beta={beta:.4} f={:.6} hardness={h:.6} diff={:+.6} exhausted={}", b.value, b.value - h, b.scan_exhausted);
    }
    println!("sigma sweep at beta=0.7:");
    for sigma in [1.0, 1.5, std::f64::consts::E - 1.0, 10.0] {
        let q = BoundQuery { envelope_grid: 400, ..BoundQuery::new(0.7, CMin::Asymptotic, sigma) };
        let b = ac_lower_general(&q).unwrap();
        println!("  sigma={sigma:.3} f={:.6}", b.value);
    }
    // Prop 5 separation over [0.40, 0.99]
    let mut max_gap: f64 = 0.0;
    let mut all_below = true;
    for k in 0..=59 {
        let beta = 0.40 + 0.01 * k as f64;
        let m = msvv_general_upper(beta, 2001).unwrap();
        let a = ac_lower_deterministic(beta, CMin::Asymptotic).unwrap();
        if m >= a { all_below = false; println!("  VIOLATION at beta={beta}: msvv={m} ac={a}"); }
        max_gap = max_gap.max(a / m - 1.0);
    }
    println!("prop5: all_below={all_below} max multiplicative gap={max_gap:.4}");
    println!("elapsed: {:?}", t0.elapsed());
}
