//! Minimal library walkthrough: parse a session, verify a bivector, take a
//! bracket, and enumerate the constant-coefficient structures.

use jetviber::fixtures::{bivector_named, model_of};
use jetviber::lang::Session;
use jetviber::poly::print_canonical;
use jetviber::schouten::{check_bivector, is_poisson, schouten_bracket, CheckReport};
use jetviber::search::{search, SearchSpace};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let s = Session::parse(
        "indep x y;\n\
         equation u[x,y] = 0 solve u[x,y];\n\
         function h1(x, u[x]);\n\
         bivector B0 = p[];\n\
         bivector B1 = D[x](h1)/2 * p[x] + h1*p[x,x];\n",
    )?;
    let eq = model_of(&s)?;

    let b0 = bivector_named(&s, "B0")?;
    let b1 = bivector_named(&s, "B1")?;
    assert!(matches!(check_bivector(&b0, &eq)?, CheckReport::Pass { .. }));
    assert!(matches!(check_bivector(&b1, &eq)?, CheckReport::Pass { .. }));

    let (poisson, witness) = is_poisson(&b0, &eq)?;
    assert!(poisson && witness.is_zero());
    println!("B0 is Poisson for the wave equation");

    // B1 is Poisson only when h1 drops its u_x argument; the self-bracket is
    // the exact obstruction.
    let obstruction = schouten_bracket(&b1, &b1, &eq)?;
    println!("[[B1, B1]] = {}", print_canonical(&obstruction));

    // All bivectors with constant coefficients and odd jets of order <= 2.
    let out = search(&SearchSpace::new(&eq, 2), &eq)?;
    for b in &out.basis {
        println!("basis vector: {}", print_canonical(b));
    }
    Ok(())
}
