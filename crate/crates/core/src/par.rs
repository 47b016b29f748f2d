//! Data-parallel helpers whose results do not depend on the number of worker
//! threads.
//!
//! Work is split into chunks of a fixed size and sums use a fixed pairwise
//! tree, so the floating-point result is a function of the input alone.
//! Without the `parallel` feature everything runs on the calling thread.

/// Particles per work item.
pub const CHUNK: usize = 2048;

/// Below this length a pairwise sum is accumulated left to right.
const LEAF: usize = 64;

#[cfg(feature = "parallel")]
const SPAWN_MIN: usize = 1 << 15;

/// Applies `f` to consecutive chunks of `data`, passing the offset of each
/// chunk's first element.
pub fn for_each_chunk<T, F>(data: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        data.par_chunks_mut(CHUNK)
            .enumerate()
            .for_each(|(c, chunk)| f(c * CHUNK, chunk));
    }
    #[cfg(not(feature = "parallel"))]
    {
        data.chunks_mut(CHUNK)
            .enumerate()
            .for_each(|(c, chunk)| f(c * CHUNK, chunk));
    }
}

/// Like [`for_each_chunk`] over two slices of equal length.
pub fn for_each_chunk2<A, B, F>(a: &mut [A], b: &mut [B], f: F)
where
    A: Send,
    B: Send,
    F: Fn(usize, &mut [A], &mut [B]) + Sync + Send,
{
    assert_eq!(a.len(), b.len());
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        a.par_chunks_mut(CHUNK)
            .zip(b.par_chunks_mut(CHUNK))
            .enumerate()
            .for_each(|(c, (x, y))| f(c * CHUNK, x, y));
    }
    #[cfg(not(feature = "parallel"))]
    {
        a.chunks_mut(CHUNK)
            .zip(b.chunks_mut(CHUNK))
            .enumerate()
            .for_each(|(c, (x, y))| f(c * CHUNK, x, y));
    }
}

/// Pairwise (cascade) summation with a split point depending only on length.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= LEAF {
        return values.iter().fold(0.0, |acc, &v| acc + v);
    }
    let (left, right) = values.split_at(values.len() / 2);
    #[cfg(feature = "parallel")]
    if values.len() >= SPAWN_MIN {
        let (l, r) = rayon::join(|| pairwise_sum(left), || pairwise_sum(right));
        return l + r;
    }
    pairwise_sum(left) + pairwise_sum(right)
}

/// Pairwise sum of `f(x)` over `xs`, without materializing the mapped values.
pub fn pairwise_sum_by<T: Sync>(xs: &[T], f: &(impl Fn(&T) -> f64 + Sync)) -> f64 {
    if xs.len() <= LEAF {
        return xs.iter().fold(0.0, |acc, x| acc + f(x));
    }
    let (left, right) = xs.split_at(xs.len() / 2);
    #[cfg(feature = "parallel")]
    if xs.len() >= SPAWN_MIN {
        let (l, r) = rayon::join(|| pairwise_sum_by(left, f), || pairwise_sum_by(right, f));
        return l + r;
    }
    pairwise_sum_by(left, f) + pairwise_sum_by(right, f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_sums_are_sequential() {
        assert_eq!(pairwise_sum(&[]), 0.0);
        assert_eq!(pairwise_sum(&[1.0, 2.0, 3.0]), 6.0);
    }

    #[test]
    fn pairwise_beats_naive_on_long_sums() {
        let xs = vec![0.1; 1 << 20];
        let exact = 0.1 * (1 << 20) as f64;
        let naive: f64 = xs.iter().sum();
        let pairwise = pairwise_sum(&xs);
        assert!((pairwise - exact).abs() <= (naive - exact).abs());
        assert!((pairwise - exact).abs() < 1e-9);
    }

    #[test]
    fn mapped_sum_matches_materialized() {
        let xs: Vec<u32> = (0..100_000).collect();
        let mapped: Vec<f64> = xs.iter().map(|&x| (x as f64).sqrt()).collect();
        let a = pairwise_sum(&mapped);
        let b = pairwise_sum_by(&xs, &|&x| (x as f64).sqrt());
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn chunk_offsets_cover_slice() {
        let mut v = vec![0usize; 3 * CHUNK + 17];
        for_each_chunk(&mut v, |off, c| {
            for (j, x) in c.iter_mut().enumerate() {
                *x = off + j;
            }
        });
        assert!(v.iter().enumerate().all(|(i, &x)| i == x));
    }
}
