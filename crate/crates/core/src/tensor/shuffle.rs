use super::{Shape, Tensor};
use crate::error::{Error, Result};

/// Output shape of [`pixel_shuffle`] for `input` and factor `r`.
pub fn pixel_shuffle_shape(input: Shape, r: usize) -> Result<Shape> {
    let [b, c, h, w] = input;
    if r == 0 {
        return Err(Error::shape("pixel_shuffle: factor must be at least 1"));
    }
    if c % (r * r) != 0 {
        return Err(Error::shape(format!(
            "pixel_shuffle: {c} channels are not divisible by r^2 = {}",
            r * r
        )));
    }
    Ok([b, c / (r * r), h * r, w * r])
}

/// For each output element of the shuffle, the flat index of its source element.
pub fn pixel_shuffle_index(input: Shape, r: usize) -> Result<Vec<usize>> {
    let out = pixel_shuffle_shape(input, r)?;
    let [_, c_in, h_in, w_in] = input;
    let [b, c, h, w] = out;
    let mut idx = Vec::with_capacity(b * c * h * w);
    for bi in 0..b {
        for ci in 0..c {
            for y in 0..h {
                for x in 0..w {
                    let src_c = ci * r * r + (y % r) * r + (x % r);
                    idx.push(((bi * c_in + src_c) * h_in + y / r) * w_in + x / r);
                }
            }
        }
    }
    Ok(idx)
}

/// Sub-pixel rearrangement `(b, c·r², h, w) -> (b, c, h·r, w·r)`.
pub fn pixel_shuffle(input: &Tensor, r: usize) -> Result<Tensor> {
    let shape = pixel_shuffle_shape(input.shape(), r)?;
    let idx = pixel_shuffle_index(input.shape(), r)?;
    let src = input.data();
    Tensor::from_vec(shape, idx.iter().map(|&i| src[i]).collect())
}

/// Inverse of [`pixel_shuffle`].
pub fn pixel_unshuffle(input: &Tensor, r: usize) -> Result<Tensor> {
    let [b, c, h, w] = input.shape();
    if r == 0 || h % r != 0 || w % r != 0 {
        return Err(Error::shape(format!(
            "pixel_unshuffle: spatial size {h}x{w} is not divisible by {r}"
        )));
    }
    let src_shape = [b, c * r * r, h / r, w / r];
    let idx = pixel_shuffle_index(src_shape, r)?;
    let mut out = Tensor::zeros(src_shape);
    let dst = out.data_mut();
    for (o, &i) in idx.iter().enumerate() {
        dst[i] = input.data()[o];
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn factor_one_is_identity() {
        let t = Tensor::from_fn([2, 3, 2, 5], |b, c, h, w| {
            (b * 100 + c * 10 + h * 5 + w) as f64
        });
        assert_eq!(pixel_shuffle(&t, 1).unwrap(), t);
    }

    #[test]
    fn four_channels_to_two_by_two() {
        let t = Tensor::from_vec([1, 4, 1, 1], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let s = pixel_shuffle(&t, 2).unwrap();
        assert_eq!(s.shape(), [1, 1, 2, 2]);
        assert_eq!(s.data(), &[1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn indivisible_channels() {
        let t = Tensor::zeros([1, 6, 2, 2]);
        assert!(pixel_shuffle(&t, 2).is_err());
    }

    proptest! {
        #[test]
        fn unshuffle_inverts_and_sum_is_preserved(
            r in 1usize..4, c in 1usize..3, h in 1usize..4, w in 1usize..4,
            seed in any::<u64>(),
        ) {
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let t = Tensor::random_uniform([2, c * r * r, h, w], -1.0, 1.0, &mut rng);
            let s = pixel_shuffle(&t, r).unwrap();
            prop_assert_eq!(s.len(), t.len());
            prop_assert!((s.sum() - t.sum()).abs() < 1e-12);
            prop_assert_eq!(pixel_unshuffle(&s, r).unwrap(), t);
        }
    }
}
