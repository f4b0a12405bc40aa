//! Gram matrix of the scaled surface-gradient noise fields on the sphere.

use lie_langevin::sphere::HarmonicBasis;

fn main() -> lie_langevin::Result<()> {
    let basis = HarmonicBasis::new(1.0, 3)?;
    let g = basis.gram_matrix(16);
    let off = (0..g.nrows())
        .flat_map(|a| (0..g.ncols()).map(move |b| (a, b)))
        .map(|(a, b)| (g[(a, b)] - if a == b { 1.0 } else { 0.0 }).abs())
        .fold(0.0, f64::max);
    println!("{} fields, max |G - I| = {off:.2e}", g.nrows());
    for m in basis.modes().iter().take(4) {
        println!("{m:?}");
    }
    Ok(())
}
