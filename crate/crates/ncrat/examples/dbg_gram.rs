use ncrat::linalg::Field;
use ncrat::ncexpr::parse;
use ncrat::positivity::*;

fn main() {
    let e = parse("x2*x2 - x2*x1*inv(1 + x1*x1)*x1*x2", 2, Field::Real).unwrap();
    for k in [1usize, 2, 3] {
        let basis = basis_of_vk(&e, k, &BasisOptions::default()).unwrap();
        println!("k={k} dim={}", basis.dim());
        let out = ncrat::positivity::debug_solve_gram(&e, &basis, &SohsOptions::default()).unwrap();
        println!("  outcome: {out}");
    }
}
