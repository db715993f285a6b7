//! Hashes three clusters of directions with spherical LSH and shows how tokens land in
//! buckets and chunks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use swt_sr::attention::{bucket_count, spherical_lsh};

fn main() -> swt_sr::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let dim = 8;
    let centres: Vec<Vec<f64>> = (0..3)
        .map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for i in 0..96 {
        let c = i % 3;
        labels.push(c);
        rows.extend(centres[c].iter().map(|v| v + rng.gen_range(-0.1..0.1)));
    }
    let chunk = 16;
    let buckets = bucket_count(96, chunk);
    let asg = spherical_lsh(&rows, dim, buckets, chunk, 42)?;
    println!(
        "{buckets} buckets, {} chunks of at most {chunk} tokens",
        asg.chunks.len()
    );
    for b in 0..buckets {
        let members: Vec<usize> = (0..96).filter(|&i| asg.codes[i] == b).collect();
        let mut per_cluster = [0; 3];
        members.iter().for_each(|&i| per_cluster[labels[i]] += 1);
        println!(
            "bucket {b}: {:>3} tokens, by cluster {per_cluster:?}",
            members.len()
        );
    }
    Ok(())
}
