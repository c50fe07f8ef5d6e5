use ncrat::ellipticity::*;
use ncrat::linalg::{min_singular_value, Field, Matrix};
use ncrat::ncexpr::{find_scalar_center, parse, MatrixPoint};
use ncrat::realization::{build, minimize};
use num_complex::Complex64;
use std::time::Instant;

fn run(name: &str, text: &str, g: usize, field: Field) -> (ncrat::realization::Realization, EllipticityCertificate) {
    let t0 = Instant::now();
    let e = parse(text, g, field).unwrap();
    let center = find_scalar_center(&e, 100, 1).unwrap();
    let r = minimize(&build(&e, &center).unwrap()).unwrap();
    let cert = classify(r.pencil(), &ClassifyOptions::default());
    println!(
        "{name}: size {} verdict {:?} chain {} eps {:?} witness {} [{:.2?}]",
        r.size(),
        cert.verdict,
        cert.chain.len(),
        cert.epsilon,
        cert.witness.is_some(),
        t0.elapsed()
    );
    if !cert.chain.is_empty() {
        let eigs = &cert.chain[0].realpart_eigenvalues;
        let rank = eigs.iter().filter(|&&x| x > 1e-5).count();
        println!("  step0 eigs {:?} rank {}", eigs, rank);
    }
    println!("  failure: {:?}", cert.failure);
    let rep = verify_certificate(r.pencil(), &cert, 1e-7);
    println!("  verify: {} {:?}", rep.ok, rep.reason);
    (r, cert)
}

fn main() {
    run("ex1", "inv((1 - x1*x2)*(1 - x2*x1) + x1*x1)", 2, Field::Real);
    run("ex2", "inv(2 + (x1*x2 - x1 - 2*x2)*inv(1 + x2*x2) + (x1 + x2 - 1)*inv(1 + x2*x2)*x1)", 2, Field::Real);
    let (r3, _c3) = run("ex3", "inv(1 + x2*x2 - ((1 - x1)*x1 + x2)*inv(1 + 2*x1*x1)*((1 + x1)*x1 + x2))", 2, Field::Real);
    let _ = (r3,);
    // true ex3 over C
    let (rc, _cc) = run("ex3C", "inv(1 + x2*x2 - ((1 - i)*x1 + x2)*inv(1 + 2*x1*x1)*((1 + i)*x1 + x2))", 2, Field::Complex);
    // paper's explicit singular pair
    let x1 = Matrix::from_rows_vec(Field::Complex, 2, 2, vec![
        Complex64::new(0.,0.), Complex64::new(1.,1.),
        Complex64::new(1.,-1.), Complex64::new(0.,0.)]).unwrap();
    let x2 = Matrix::from_rows_vec(Field::Complex, 2, 2, vec![
        Complex64::new(0.,0.), Complex64::new(0.,0.5),
        Complex64::new(0.,-0.5), Complex64::new(0.,0.)]).unwrap();
    let pt = MatrixPoint::new(Field::Complex, vec![x1, x2]).unwrap();
    let sigma = min_singular_value(&rc.pencil().eval(&pt.offset(rc.center(), -1.0)).unwrap());
    println!("ex3C paper pair sigma: {sigma:.3e}");
    run("ex4", "inv((1 + (x2*x1)*(x2*x1)*x2*x2)*(1 + x2*x2*(x1*x2)*(x1*x2)) - (x1*x2 - x2*x1)*(x1*x2 - x2*x1))", 2, Field::Real);
    // example 2.2 also
    let a0 = Matrix::from_real_rows(&[&[1., 0., -1.], &[0., 1., 1.], &[1., -1., 0.]]);
    let a1 = Matrix::from_real_rows(&[&[0., 1., 1.], &[-1., 0., 0.], &[-1., 0., 0.]]);
    let a2 = Matrix::from_real_rows(&[&[0., -1., 0.], &[1., 0., 0.], &[0., 0., 0.]]);
    let l = ncrat::pencil::LinearPencil::new(vec![a0, a1, a2]).unwrap();
    let t0 = Instant::now();
    let cert = classify(&l, &ClassifyOptions::default());
    println!("example 2.2: {:?} chain {} [{:.2?}]", cert.verdict, cert.chain.len(), t0.elapsed());
}
