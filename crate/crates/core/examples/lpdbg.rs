use mcm_core::benchmark::lp::{lp_solve, LpProblem};
fn main() {
    // maximize -l1 - 2 l2 s.t. l1 + l2 <= 1 and -(l1 + l2) <= -1  (i.e. = 1)
    let p = LpProblem {
        objective: vec![-1.0, -2.0],
        rows: vec![vec![1.0, 1.0], vec![-1.0, -1.0]],
        rhs: vec![1.0, -1.0],
    };
    let s = lp_solve(&p).unwrap();
    println!("{:?} value={} x={:?}", s.status, s.value, s.x);
}
