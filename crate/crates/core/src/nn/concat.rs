use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{Shape, Tensor};

/// Concatenates along the channel axis in the given order.
pub fn concat_channels<S: Scalar>(parts: &[&Tensor<S>]) -> Result<Tensor<S>> {
    let first = parts
        .first()
        .ok_or_else(|| Error::shape("concat", "no parts to concatenate"))?
        .shape();
    let mut channels = 0;
    for p in parts {
        let s = p.shape();
        if s.batch != first.batch || s.time != first.time {
            return Err(Error::shape(
                "concat",
                format!("part {s} incompatible with {first} (batch and time must agree)"),
            ));
        }
        channels += s.channels;
    }
    let shape = Shape::new(first.batch, channels, first.time);
    let mut data = Vec::with_capacity(shape.len());
    for b in 0..first.batch {
        for p in parts {
            data.extend_from_slice(p.sample(b));
        }
    }
    Tensor::from_vec(shape, data)
}

/// Inverse of [`concat_channels`]: splits at the given channel counts.
pub fn split_channels<S: Scalar>(input: &Tensor<S>, sizes: &[usize]) -> Result<Vec<Tensor<S>>> {
    let shape = input.shape();
    if sizes.iter().sum::<usize>() != shape.channels || sizes.contains(&0) {
        return Err(Error::shape(
            "split",
            format!("sizes {sizes:?} do not partition {} channels", shape.channels),
        ));
    }
    let mut out: Vec<Vec<S>> = sizes
        .iter()
        .map(|&c| Vec::with_capacity(shape.batch * c * shape.time))
        .collect();
    for b in 0..shape.batch {
        let sample = input.sample(b);
        let mut offset = 0;
        for (dst, &c) in out.iter_mut().zip(sizes) {
            let n = c * shape.time;
            dst.extend_from_slice(&sample[offset..offset + n]);
            offset += n;
        }
    }
    out.into_iter()
        .zip(sizes)
        .map(|(data, &c)| Tensor::from_vec(Shape::new(shape.batch, c, shape.time), data))
        .collect()
}
