use robust_beta::zero_structure::{
    check_period3, derivative_bound_at_root, factor_zero_poly, period3_alignment,
    rn_magnitude_bound, RN_FLOOR,
};
use robust_beta::{beta_encode, gre_encode, FlakyPolicy, QuantizerSpec, TernaryPolynomial, INV_PHI, PHI};

fn zero_expansions(len: usize) -> Vec<(FlakyPolicy, TernaryPolynomial, Vec<robust_beta::Bit>)> {
    (0..10u64)
        .map(|seed| {
            let policy = match seed % 4 {
                0 => FlakyPolicy::AlwaysMinus,
                1 => FlakyPolicy::AlwaysPlus,
                2 => FlakyPolicy::Toggle,
                _ => FlakyPolicy::SeededRandom(seed),
            };
            let q = QuantizerSpec::new(0.3, 2.0, policy).unwrap();
            let bits = gre_encode(0.0, len, &q).unwrap().bits;
            (policy, TernaryPolynomial::from_bits(&bits).unwrap(), bits)
        })
        .collect()
}

#[test]
fn three_hundred_bit_zero_expansions() {
    let grid: Vec<f64> = (0..1000).map(|i| INV_PHI * i as f64 / 1000.0).collect();
    for (policy, p, bits) in zero_expansions(300) {
        assert!(check_period3(&bits), "{policy}");
        assert_eq!(period3_alignment(&bits), Some(0), "{policy}");
        let r = factor_zero_poly(&p).unwrap();
        assert_eq!(r.n_blocks, 100);
        assert_eq!(r.expand(), p);
        assert!(p.value(INV_PHI).abs() <= 1e-10, "{policy}");
        assert!(derivative_bound_at_root(&p).unwrap() >= 1.545);
        for &t in &grid {
            let (value, bound) = rn_magnitude_bound(&r, t).unwrap();
            assert!(value >= bound && bound >= RN_FLOOR - 1e-3);
        }
    }
}

#[test]
fn forty_eight_bit_remainder_is_exactly_zero() {
    // Independent long division: peel off the leading term of p with
    // multiples of (1 − t − t²) from the top degree downwards.
    for (_, p, _) in zero_expansions(48) {
        let mut rem: Vec<i64> = p.coeffs().iter().map(|&c| i64::from(c)).collect();
        let mut quot = vec![0i64; rem.len() - 2];
        for k in (0..quot.len()).rev() {
            // Leading coefficient of (1 − t − t²) is −1 at t².
            let c = -rem[k + 2];
            quot[k] = c;
            rem[k] -= c;
            rem[k + 1] += c;
            rem[k + 2] += c;
        }
        assert!(rem.iter().all(|&v| v == 0), "{rem:?}");
        let r = factor_zero_poly(&p).unwrap();
        let q8: Vec<i64> = r.r_coeffs.iter().map(|&v| i64::from(v)).collect();
        assert_eq!(quot, q8);
    }
}

#[test]
fn golden_beta_zero_expansion() {
    // β = φ from u = 0: the policy picks s, then the state walks
    // 0 → −sφ → −s → 0 and the block reads (s, −s, −s).
    for policy in FlakyPolicy::all(5) {
        let q = QuantizerSpec::new(0.5, 1.0, policy).unwrap();
        let bits = beta_encode(0.0, PHI, 30, &q).unwrap().bits;
        assert!(check_period3(&bits), "{policy}");
        let p = TernaryPolynomial::from_bits(&bits).unwrap();
        assert!(factor_zero_poly(&p).is_ok());
    }
}
