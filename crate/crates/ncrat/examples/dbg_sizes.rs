use ncrat::linalg::Field;
use ncrat::ncexpr::{find_scalar_center, parse};
use ncrat::realization::{build, minimize};

fn main() {
    let cases = [
        ("inv((1 - x1*x2)*(1 - x2*x1) + x1*x1)", 2, 4usize),
        ("inv(2 + (x1*x2 - x1 - 2*x2)*inv(1 + x2*x2) + (x1 + x2 - 1)*inv(1 + x2*x2)*x1)", 2, 3),
        ("inv((1 + (x2*x1)*(x2*x1)*x2*x2)*(1 + x2*x2*(x1*x2)*(x1*x2)) - (x1*x2 - x2*x1)*(x1*x2 - x2*x1))", 2, 15),
    ];
    for (text, g, expect) in cases {
        let e = parse(text, g, Field::Real).unwrap();
        let center = find_scalar_center(&e, 100, 1).unwrap();
        let r = build(&e, &center).unwrap();
        let m = minimize(&r).unwrap();
        println!("built {} -> minimized {} (expect {}) center {:?}", r.size(), m.size(), expect, center);
    }
    // complex example
    let text = "inv(1 + x2*x2 - ((1 - i)*x1 + x2)*inv(1 + 2*x1*x1)*((1 + i)*x1 + x2))";
    let e = parse(text, 2, Field::Complex).unwrap();
    let center = find_scalar_center(&e, 100, 1).unwrap();
    let r = build(&e, &center).unwrap();
    let m = minimize(&r).unwrap();
    println!("complex: built {} -> minimized {} (paper prints 4)", r.size(), m.size());
}
