use cdm_core::compressor::{measure_size, CompressorSpec, SizeCache};
use cdm_core::measures::{
    cdm, cdm_offset, matrix_from_sizes, ncd, pairwise_matrix, compute_sizes, CorpusItem,
    MeasureSpec,
};
use cdm_core::compressor::CachedCompressor;
use cdm_core::Exact;
use num_bigint::BigInt;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_bytes(rng: &mut ChaCha8Rng, len: usize) -> Vec<u8> {
    (0..len).map(|_| rng.gen()).collect()
}

fn item(id: &str, bytes: Vec<u8>) -> CorpusItem {
    CorpusItem { id: id.into(), label: id.into(), bytes }
}

#[test]
fn zero_offset_is_plain_cdm_on_random_triples() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..10_000 {
        let (x, y, xy) = (rng.gen_range(0..100_000u64), rng.gen_range(0..100_000u64), rng.gen_range(0..200_000u64));
        match (cdm::<f64>(x, y, xy), cdm_offset::<f64>(x, y, xy, 0)) {
            (Ok(a), Ok(b)) => assert_eq!(a.to_bits(), b.to_bits()),
            (Err(_), Err(_)) => {}
            other => panic!("divergent results {other:?}"),
        }
        assert_eq!(cdm::<Exact>(x, y, xy).ok(), cdm_offset::<Exact>(x, y, xy, 0).ok());
    }
}

proptest! {
    #[test]
    fn scale_cancels_exactly(
        o in 0u64..200,
        dx in 1u64..100_000,
        dy in 1u64..100_000,
        dxy in 1u64..200_000,
        num in 1i64..10_000,
        den in 1i64..10_000,
    ) {
        let (cx, cy, cxy) = (o + dx, o + dy, o + dxy);
        let beta = Exact::new(BigInt::from(num), BigInt::from(den));
        let scaled = |c: u64| Exact::from_integer(BigInt::from(c - o)) / beta.clone();
        let expected = scaled(cxy) / (scaled(cx) + scaled(cy));
        prop_assert_eq!(cdm_offset::<Exact>(cx, cy, cxy, o).unwrap(), expected);
    }

    #[test]
    fn measures_are_nonnegative(cx in 1u64..10_000, cy in 1u64..10_000, cxy in 0u64..20_000) {
        prop_assert!(cdm::<f64>(cx, cy, cxy).unwrap() >= 0.0);
        prop_assert!(ncd::<f64>(cx, cy, cxy).unwrap() >= 0.0);
    }
}

#[test]
fn duplicated_repetitive_strings_are_close() {
    let cache = SizeCache::in_memory();
    let x = b"ab".repeat(2000);
    let corpus = [item("p", x.clone()), item("q", x)];
    let m = pairwise_matrix::<f64>(&corpus, &CompressorSpec::blocksort(), MeasureSpec::Cdm, &cache).unwrap();
    // C(x) = 29 and C(xx) = 29: the second copy costs nothing.
    assert_eq!(*m.get(0, 1), 0.5);
    assert!(*m.get(0, 1) < 0.75);
}

#[test]
fn independent_random_strings_are_far() {
    let spec = CompressorSpec::blocksort();
    let cache = SizeCache::in_memory();
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(500 + seed);
        let corpus = [item("a", random_bytes(&mut rng, 4096)), item("b", random_bytes(&mut rng, 4096))];
        let m = pairwise_matrix::<f64>(&corpus, &spec, MeasureSpec::Cdm, &cache).unwrap();
        let v = *m.get(0, 1);
        assert!(v > 0.9 && v < 1.1, "seed {seed}: {v}");
    }
}

#[test]
fn shared_motif_is_closer_than_random() {
    let spec = CompressorSpec::blocksort();
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let motif = random_bytes(&mut rng, 600);
        let mut a = motif.clone();
        a.extend(random_bytes(&mut rng, 400));
        let mut b = random_bytes(&mut rng, 400);
        b.extend(&motif);
        let r = random_bytes(&mut rng, 1000);

        let c = |s: &[u8]| measure_size(&spec, s).unwrap();
        let ab = cdm::<f64>(c(&a), c(&b), c(&[a.clone(), b.clone()].concat())).unwrap();
        let ar = cdm::<f64>(c(&a), c(&r), c(&[a.clone(), r.clone()].concat())).unwrap();
        assert!(ab < ar, "seed {seed}: {ab} vs {ar}");
    }
}

#[test]
fn matrix_is_symmetric_and_in_range() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let corpus: Vec<CorpusItem> = (0..6)
        .map(|i| {
            let len = rng.gen_range(500..1500);
            item(&format!("i{i}"), (0..len).map(|_| if rng.gen_bool(0.15) { b'1' } else { b'0' }).collect())
        })
        .collect();
    let cache = SizeCache::in_memory();
    for spec in [CompressorSpec::blocksort(), CompressorSpec::lz()] {
        let sizes = compute_sizes(&corpus, &CachedCompressor::new(&spec, &cache)).unwrap();
        for measure in [MeasureSpec::Cdm, MeasureSpec::CdmOffset { offset: 17 }, MeasureSpec::Ncd] {
            let m = matrix_from_sizes::<f64>(&sizes, measure).unwrap();
            for i in 0..6 {
                for j in 0..6 {
                    assert_eq!(m.get(i, j).to_bits(), m.get(j, i).to_bits());
                    let v = *m.get(i, j);
                    assert!(v.is_finite() && v >= 0.0);
                    if measure != MeasureSpec::Ncd {
                        assert!(v > 0.0 && v < 1.5, "{measure} {v}");
                    }
                }
            }
        }
        // Offset zero reproduces plain CDM bit for bit.
        let plain = matrix_from_sizes::<f64>(&sizes, MeasureSpec::Cdm).unwrap();
        let zero = matrix_from_sizes::<f64>(&sizes, MeasureSpec::CdmOffset { offset: 0 }).unwrap();
        assert_eq!(plain.values(), zero.values());
    }
}

#[test]
fn cached_sizes_are_reused() {
    let spec = CompressorSpec::blocksort();
    let cache = SizeCache::in_memory();
    let corpus = [item("a", b"0101".repeat(100)), item("b", b"0011".repeat(100)), item("c", b"0001".repeat(100))];
    pairwise_matrix::<f64>(&corpus, &spec, MeasureSpec::Cdm, &cache).unwrap();
    // 3 singles + 6 ordered-or-diagonal pairs.
    assert_eq!(cache.computations(), 9);
    pairwise_matrix::<f64>(&corpus, &spec, MeasureSpec::Ncd, &cache).unwrap();
    assert_eq!(cache.computations(), 9);
}
