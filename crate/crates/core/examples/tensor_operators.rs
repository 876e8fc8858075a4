//! Masking and summing a small tensor.

use indep_stream::hashing::ZeroOneHash;
use indep_stream::tensor::DenseTensor;

fn main() -> indep_stream::Result<()> {
    let m = DenseTensor::from_fn(3, 3, |i| (i[0] as i128 - 2) * (i[1] as i128) - i[2] as i128)?;
    let h = ZeroOneHash::from_table(vec![true, false, true]);

    let masked = m.prefix_zero(&[h])?;
    let reduced = masked.suffix_sum(1)?;
    println!("|M|              {}", m.l1_norm());
    println!("row norms        {:?}", m.absolute_vector()?.entries());
    println!("masked rows      {:?}", masked.absolute_vector()?.entries());
    println!("summed out       {:?}", reduced.entries());
    println!("row 3 is 0.4-heavy: {}", m.is_significant(3, 0.4)?);
    Ok(())
}
