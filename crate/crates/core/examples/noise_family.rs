//! The interpolated confusion family C_i = Ω(I + iN) drawn from a random
//! reference matrix, and how far each member is from the identity.

use uma::noise::{approximation_factor, confusion_at, sample_reference};

fn main() -> uma::Result<()> {
    let family = sample_reference(4, &mut uma::rng::seeded(1))?;
    println!("reference M (rows sum to 1):\n{:.3}", family.reference());
    for i in [0, 1, 5, 10, 15, 20] {
        match confusion_at(&family, i) {
            Ok(c) => println!(
                "i={i:<2} rho={:+.1} off-diagonal norm {:.3} diagonal {:.3?}",
                approximation_factor(i64::from(i)),
                c.off_diagonal_norm(),
                c.matrix().diagonal().as_slice()
            ),
            Err(e) => println!("i={i:<2} {e}"),
        }
    }
    Ok(())
}
