use std::rc::Rc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::tensor::{Graph, Tensor, Var};

/// Upper bound on hash buckets, whatever the token count.
pub const MAX_BUCKETS: usize = 128;

/// Number of hash buckets for `n_tokens` tokens: about one bucket per `chunk_size`
/// tokens, rounded down to an even count, capped at [`MAX_BUCKETS`]. A single bucket
/// means every token attends to every other.
pub fn bucket_count(n_tokens: usize, chunk_size: usize) -> usize {
    let n = (n_tokens / chunk_size.max(1)).min(MAX_BUCKETS);
    if n < 2 {
        1
    } else {
        n - n % 2
    }
}

/// Result of hashing one set of token vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct BucketAssignment {
    /// Bucket id per token.
    pub codes: Vec<usize>,
    /// Token indices attending to each other: buckets in ascending id, each split into
    /// runs of at most `chunk_size` tokens in their original order.
    pub chunks: Vec<Vec<usize>>,
    /// Unit-norm random projection directions, `n_buckets / 2` of them.
    pub projections: Vec<Vec<f64>>,
}

fn projection_rows(count: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| loop {
            let row: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                break row.into_iter().map(|v| v / norm).collect();
            }
        })
        .collect()
}

/// Angular hash of each `dim`-wide row of `rows`.
///
/// With `m = n_buckets / 2` random unit directions `P`, a vector `v` lands in bucket
/// `argmax([P·v; -P·v])`, ties going to the lower id. Zero vectors land in bucket 0, as
/// does everything when `n_buckets < 2`.
pub fn spherical_lsh(
    rows: &[f64],
    dim: usize,
    n_buckets: usize,
    chunk_size: usize,
    seed: u64,
) -> Result<BucketAssignment> {
    if dim == 0 || !rows.len().is_multiple_of(dim) {
        return Err(Error::shape(format!(
            "{} values do not split into rows of {dim}",
            rows.len()
        )));
    }
    if chunk_size == 0 {
        return Err(Error::config("chunk_size must be at least 1"));
    }
    let n = rows.len() / dim;
    let m = n_buckets / 2;
    let projections = if m == 0 {
        Vec::new()
    } else {
        projection_rows(m, dim, seed)
    };
    let codes: Vec<usize> = rows
        .chunks(dim)
        .map(|v| {
            if m == 0 || v.iter().all(|&x| x == 0.0) {
                return 0;
            }
            let mut best = (0, f64::NEG_INFINITY);
            for sign in [1.0, -1.0] {
                for (i, p) in projections.iter().enumerate() {
                    let s = sign * p.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
                    let id = if sign > 0.0 { i } else { m + i };
                    if s > best.1 {
                        best = (id, s);
                    }
                }
            }
            best.0
        })
        .collect();
    let mut by_bucket: Vec<Vec<usize>> = vec![Vec::new(); (2 * m).max(1)];
    for (t, &code) in codes.iter().enumerate() {
        by_bucket[code].push(t);
    }
    let chunks = by_bucket
        .iter()
        .flat_map(|members| members.chunks(chunk_size).map(<[usize]>::to_vec))
        .collect();
    debug_assert_eq!(codes.len(), n);
    Ok(BucketAssignment {
        codes,
        chunks,
        projections,
    })
}

/// Softmax attention restricted to the chunks of each batch item's assignment.
///
/// `query` and `key` are `(b, 1, n, d)`, `value` is `(b, 1, n, c)`; logits are plain dot
/// products. Tokens absent from every chunk get a zero output.
pub fn bucket_attention(
    g: &mut Graph,
    query: Var,
    key: Var,
    value: Var,
    assignments: Rc<Vec<BucketAssignment>>,
) -> Result<Var> {
    let [b, _, n, d] = g.value(query).shape();
    let c = g.value(value).shape()[3];
    if g.value(key).shape() != [b, 1, n, d] || g.value(value).shape() != [b, 1, n, c] {
        return Err(Error::shape(format!(
            "bucket attention: query {:?}, key {:?}, value {:?}",
            g.value(query).shape(),
            g.value(key).shape(),
            g.value(value).shape()
        )));
    }
    if assignments.len() != b {
        return Err(Error::shape(format!(
            "{} assignments for batch {b}",
            assignments.len()
        )));
    }
    let (qv, kv, vv) = (
        g.value(query).clone(),
        g.value(key).clone(),
        g.value(value).clone(),
    );
    let mut out = Tensor::zeros([b, 1, n, c]);
    // Softmax rows per (batch, chunk, query position).
    let mut probs: Vec<Vec<Vec<f64>>> = Vec::new();
    for (bi, asg) in assignments.iter().enumerate() {
        let row = |w: usize, i: usize| (bi * n + i) * w;
        for chunk in &asg.chunks {
            let mut chunk_probs = Vec::with_capacity(chunk.len());
            for &i in chunk {
                let qi = &qv.data()[row(d, i)..][..d];
                let logits: Vec<f64> = chunk
                    .iter()
                    .map(|&j| {
                        qi.iter()
                            .zip(&kv.data()[row(d, j)..][..d])
                            .map(|(a, b)| a * b)
                            .sum()
                    })
                    .collect();
                let mx = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let ex: Vec<f64> = logits.iter().map(|l| (l - mx).exp()).collect();
                let z: f64 = ex.iter().sum();
                let p: Vec<f64> = ex.into_iter().map(|e| e / z).collect();
                let o = row(c, i);
                for (pj, &j) in p.iter().zip(chunk) {
                    let vj = row(c, j);
                    for e in 0..c {
                        out.data_mut()[o + e] += pj * vv.data()[vj + e];
                    }
                }
                chunk_probs.push(p);
            }
            probs.push(chunk_probs);
        }
    }
    let asg = assignments;
    Ok(g.record(
        "bucket_attention",
        &[query, key, value],
        out,
        Box::new(move |gout| {
            let mut gq = Tensor::zeros(qv.shape());
            let mut gk = Tensor::zeros(kv.shape());
            let mut gv = Tensor::zeros(vv.shape());
            let mut chunk_id = 0;
            for (bi, a) in asg.iter().enumerate() {
                let at = |w: usize, i: usize| (bi * n + i) * w;
                for chunk in &a.chunks {
                    for (p, &i) in probs[chunk_id].iter().zip(chunk) {
                        let go = &gout.data()[at(c, i)..][..c];
                        // dL/dp_j = go·v_j, then through the softmax.
                        let dp: Vec<f64> = chunk
                            .iter()
                            .map(|&j| {
                                go.iter()
                                    .zip(&vv.data()[at(c, j)..][..c])
                                    .map(|(a, b)| a * b)
                                    .sum()
                            })
                            .collect();
                        let mean: f64 = p.iter().zip(&dp).map(|(a, b)| a * b).sum();
                        for ((&pj, &dpj), &j) in p.iter().zip(&dp).zip(chunk) {
                            let ds = pj * (dpj - mean);
                            let (qo, ko, vo) = (at(d, i), at(d, j), at(c, j));
                            for e in 0..d {
                                gq.data_mut()[qo + e] += ds * kv.data()[ko + e];
                                gk.data_mut()[ko + e] += ds * qv.data()[qo + e];
                            }
                            for e in 0..c {
                                gv.data_mut()[vo + e] += pj * go[e];
                            }
                        }
                    }
                    chunk_id += 1;
                }
            }
            vec![(query, gq), (key, gk), (value, gv)]
        }),
    ))
}
