use ergodeq::lyapunov::{matrix_power, TransferMatrix};
fn main() {
    let a = TransferMatrix::one_step(20.0, -2.0);
    for count in [10u128, 32, 64, 128, 162] {
        let (acc, m) = matrix_power(&a, count);
        println!("count={count}: acc={acc:.4} local={:?} norm={:.4e} total={:.4}", 
            m.m[0][0].is_finite(), m.norm(), acc + m.log_norm());
    }
    // expected: count * g(22)
    println!("g(22)*162 = {:.4}", ergodeq::lyapunov::g_closed_form(22.0) * 162.0);
}
