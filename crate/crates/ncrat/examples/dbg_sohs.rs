use ncrat::linalg::Field;
use ncrat::ncexpr::{format_expr, parse};
use ncrat::positivity::{basis_of_vk, BasisOptions};

fn main() {
    let e = parse("x2*x2 - x2*x1*inv(1 + x1*x1)*x1*x2", 2, Field::Real).unwrap();
    println!("tau = {}", e.tau());
    for k in [1usize, 2, 3] {
        let basis = basis_of_vk(&e, k, &BasisOptions::default()).unwrap();
        println!("k={k}: dim {} truncated {} enumerated {}", basis.dim(), basis.truncated, basis.enumerated);
        for (w, len) in basis.elements.iter().zip(&basis.lengths) {
            println!("   [{len}] {}", format_expr(w));
        }
    }
}
