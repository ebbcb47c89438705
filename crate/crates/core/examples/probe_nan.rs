use std::sync::Arc;
use ergodeq::dynamics::thm2::*;
use ergodeq::dynamics::RotationSystem;
use ergodeq::lyapunov::{CocycleProduct, TransferMatrix};
use ergodeq::numerics::Real;
use ergodeq::operator::PotentialSource;
use rug::Rational;

fn main() {
    let sys = RotationSystem::golden(Real::parse_rational("0.3").unwrap()).unwrap();
    let mc = MonteCarloConfig::new(1000, 20260809);
    let c = construct_thm2_potential(&sys, 6, &mc, ScanGrid::PowersOfThree).unwrap();
    let src = PotentialSource::thm2_scaled(
        Arc::new(c), 0.3,
        Rational::from(-2), Rational::from(2),
    );
    let e = 20.0;
    let mut state = CocycleProduct::identity();
    let mut pos = 0i64;
    for target in [81i64, 243, 300, 729] {
        let runs = src.runs(pos, (target - pos) as u128).unwrap();
        for r in &runs {
            let step = TransferMatrix::one_step(e, r.value);
            let before = state.log_norm();
            state.apply_power(&step, r.len, 1);
            if !state.log_norm().is_finite() {
                println!("NaN after run v={} len={} (before={before:.3}) mat={:?} acc={}", r.value, r.len, state.mat, state.acc_log);
                return;
            }
        }
        pos = target;
        println!("n={target}: log={:.4}", state.log_norm());
    }
}
