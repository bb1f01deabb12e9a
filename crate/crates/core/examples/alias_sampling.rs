//! Constant-time categorical draws from a Walker alias table.
//!
//! Builds a table over a skewed distribution, compares empirical frequencies with the target
//! and shows how the draw capacity marks a table as stale.

use mmsg::alias::AliasTable;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> mmsg::Result<()> {
    let weights = [8.0, 4.0, 2.0, 1.0, 0.5, 0.0, 0.5];
    let total: f64 = weights.iter().sum();
    let table = AliasTable::new(&weights)?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);

    let n = 1_000_000;
    let mut counts = vec![0u64; weights.len()];
    for _ in 0..n {
        counts[table.sample(&mut rng)] += 1;
    }
    println!("outcome\ttarget\tinduced\tempirical");
    for (k, (&w, &c)) in weights.iter().zip(&counts).enumerate() {
        println!("{k}\t{:.5}\t{:.5}\t{:.5}", w / total, table.induced_probs()[k], c as f64 / n as f64);
    }

    // The table carries one cached draw per outcome before its owner should rebuild it.
    let mut cached = table.clone();
    let mut draws = 0;
    while !cached.is_exhausted() {
        cached.draw(&mut rng);
        draws += 1;
    }
    println!("capacity {} exhausted after {draws} draws", table.capacity());
    Ok(())
}
