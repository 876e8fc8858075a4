//! Exact distance from independence of a small stream.
//!
//! cargo run --example exact_distance

use indep_stream::stream::{
    build_frequency_table, exact_statistical_distance_ratio, independence_tensor_l1, TupleStream,
};
use indep_stream::tensor::{dense_independence_tensor, DEFAULT_DENSE_BUDGET};

fn main() -> indep_stream::Result<()> {
    let tuples = vec![vec![1, 1], vec![2, 2], vec![1, 2], vec![1, 1]];
    let table = build_frequency_table(TupleStream::from_tuples(2, 2, tuples)?)?;

    let dense = dense_independence_tensor(&table, DEFAULT_DENSE_BUDGET)?;
    println!("tensor entries {:?}", dense.entries());
    println!("l1 norm        {}", independence_tensor_l1(&table)?);
    println!("distance       {}", exact_statistical_distance_ratio(&table)?);
    Ok(())
}
