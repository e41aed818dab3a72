//! Builds a small EMDS container in memory from generated designs, reads it
//! back, and prints the normalisation statistics and one indexed lookup.
//!
//! cargo run --release --example dataset_roundtrip -- [n_designs]

use emstress::gen::{design_seed, generate_tree, GenConfig};
use emstress::model::{InterconnectTree, PhysicalParams};
use emstress::raster::{
    encode_dataset, rasterize_current, rasterize_stress, split_by_design, Dataset, DatasetReader, NormStats, Record,
    SamplePair, Split,
};
use emstress::solver::{solve_transient, SolverConfig};

fn main() -> emstress::Result<()> {
    let n: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(8);
    let years = [1.0, 5.0, 10.0];
    let ids: Vec<u64> = (0..n).collect();
    let (_, test) = split_by_design(&ids, 0.25, 42);

    let mut records = Vec::new();
    for id in 0..n {
        let tree = InterconnectTree { design_id: id, ..generate_tree(design_seed(42, id), &GenConfig::default())? };
        let field = solve_transient(&tree, &PhysicalParams::default(), &SolverConfig::default(), &years)?;
        let input = rasterize_current(&tree)?;
        for &t in &years {
            let pair = SamplePair::new(input.clone(), rasterize_stress(&tree, &field, t)?, t)?;
            let split = if test.contains(&id) { Split::Test } else { Split::Train };
            records.push(Record { split, pair });
        }
    }
    let train: Vec<SamplePair> = records.iter().filter(|r| r.split == Split::Train).map(|r| r.pair.clone()).collect();
    let ds = Dataset { stats: NormStats::fit(&train)?, records };
    let bytes = encode_dataset(&ds)?;
    println!("{} samples, {} bytes, test designs {test:?}", ds.records.len(), bytes.len());

    let reader = DatasetReader::from_bytes(bytes)?;
    println!("{:#?}", reader.stats());
    if let Some(r) = reader.get(n - 1, 5.0)? {
        println!("design {} at {} y: {} wire pixels, {:?}", r.pair.design_id, r.pair.time, r.pair.target.mask.count(), r.split);
    }
    Ok(())
}
