use std::sync::Arc;
use ergodeq::dynamics::thm2::*;
use ergodeq::dynamics::{build_blocks, RotationSystem};
use ergodeq::lyapunov::avalanche::*;
use ergodeq::numerics::Real;
use std::time::Instant;

fn main() {
    let sys = RotationSystem::golden(Real::parse_rational("0.3").unwrap()).unwrap();
    let mc = MonteCarloConfig::new(1000, 20260809);
    let t = Instant::now();
    let c = construct_thm2_potential(&sys, 6, &mc, ScanGrid::PowersOfThree).unwrap();
    println!("N_seq = {:?} in {:?}", c.n_seq(), t.elapsed());

    // criterion 7 fractions
    for k in 1..=3usize {
        let nk = c.n_seq()[k];
        let mut viol = 0;
        let m = 400;
        for i in 0..m {
            let u = ((i as f64) + 0.5) / m as f64;
            let a = c.average_from_base(u, nk).unwrap();
            let bad = if k % 2 == 0 { a < 1.0 - 0.5f64.powi(k as i32) } else { a > 0.5f64.powi(k as i32) };
            if bad { viol += 1; }
        }
        println!("k={k} N={nk}: viol {viol}/{m}");
    }

    // gap variant 1: E=20, delta=2 (c1=1), s_max=10
    let t = Instant::now();
    match gap_demo_upper_vs_lower(20.0, 1.0, Arc::new(c.clone()), 0.3, 10) {
        Ok(rep) => {
            println!("variant1: fwd series {:?}", rep.series_forward.iter().map(|x| (x.0, (x.1*1000.0).round()/1000.0)).collect::<Vec<_>>());
            println!("variant1: tailmax-tailmin = {:.4}, need >= {:.4}; dens {:?}", rep.observed_gap,
                0.5*(ergodeq::lyapunov::g_closed_form(22.0)-ergodeq::lyapunov::g_closed_form(18.0)),
                rep.density_forward.iter().map(|x| (x.0, (x.1*100.0).round()/100.0)).collect::<Vec<_>>());
        }
        Err(e) => println!("variant1 error: {e}"),
    }
    println!("variant1 in {:?}", t.elapsed());

    // gap variant 2: tower, c1=2 -> delta=12, E=20, s_max=16
    let t = Instant::now();
    let blocks = Arc::new(build_blocks(&sys, 8, 4096).unwrap());
    match gap_demo_forward_vs_backward(20.0, 2.0, blocks, 16) {
        Ok(rep) => {
            println!("variant2: fwd tail max {:.4} min {:.4}; bwd tail max {:?}; gap {:.4}",
                rep.forward_tail_max, rep.forward_tail_min, rep.backward_tail_max, rep.observed_gap);
            println!("variant2 dens: {:?}", rep.density_forward.iter().map(|x| (x.0, (x.1*100.0).round()/100.0)).collect::<Vec<_>>());
        }
        Err(e) => println!("variant2 error: {e}"),
    }
    println!("variant2 in {:?}", t.elapsed());
}
