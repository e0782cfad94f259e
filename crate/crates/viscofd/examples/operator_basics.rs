//! Evaluate the degenerate/singular operator F(p, M) = |p|^alpha M(M) for
//! the three built-in extremal forms and demonstrate the two structure
//! properties everything else rests on: positive homogeneity in each slot
//! and the ellipticity sandwich for matrix increments.

use viscofd::operator::{
    gradient_weight, operator_value, EllipticityPair, GradientVector, OperatorVariant, SymMatrix,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let pair = EllipticityPair::new(1.0, 2.5)?;
    let p = GradientVector::two_d(0.6, -0.8, 0.0)?;
    let m = SymMatrix::sym_2d(2.0, 0.5, -1.0);

    println!("ellipticity pair (a, A) = ({}, {})", pair.a(), pair.big_a());
    println!("gradient p = (0.6, -0.8), |p| = 1, Hessian M = [[2, 0.5], [0.5, -1]]");
    println!();

    for variant in [OperatorVariant::PucciPlus, OperatorVariant::PucciMinus, OperatorVariant::Trace]
    {
        println!("--- {variant:?} ---");
        for alpha in [-0.5, 0.0, 1.0] {
            let value = operator_value(&p, &m, variant, pair, alpha)?;
            println!("  alpha = {alpha:>4}: F(p, M) = {value:+.6}");
        }

        // scaling the gradient by t multiplies F by t^alpha, scaling the
        // Hessian multiplies it by t
        let alpha = 1.0;
        let t = 3.0;
        let base = operator_value(&p, &m, variant, pair, alpha)?;
        let in_p = operator_value(&p.scale(t), &m, variant, pair, alpha)?;
        let in_m = operator_value(&p, &m.scale(t), variant, pair, alpha)?;
        println!(
            "  homogeneity at alpha = 1: F(3p, M)/F(p, M) = {:.12}, F(p, 3M)/F(p, M) = {:.12}",
            in_p / base,
            in_m / base
        );

        // adding a positive semidefinite increment N moves F by an amount
        // pinched between a w tr(N) and A w tr(N), with w = |p|^alpha
        let n = SymMatrix::sym_2d(1.0, 0.3, 0.5);
        let w = gradient_weight(&p, alpha)?;
        let inc = operator_value(&p, &m.add(&n)?, variant, pair, alpha)? - base;
        println!(
            "  increment sandwich: {:.6} <= {:.6} <= {:.6}",
            pair.a() * w * n.trace(),
            inc,
            pair.big_a() * w * n.trace()
        );
    }

    Ok(())
}
