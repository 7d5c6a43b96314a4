//! Randomized invariants of the kernels and the file format.

use proptest::prelude::*;

use vacflow::constitutive::{certify, coercivity_gap, ConstitutiveLaw, DEFAULT_SAMPLES};
use vacflow::evolution::{transport_stage, StepConfig, Trajectory};
use vacflow::io::fieldfile::{decode_field, encode_field};
use vacflow::lame::{apply_lame, solve_lame, LameParameter};
use vacflow::random::{random_field, RandomSpec};
use vacflow::spectral::{dealias, norms, Field, Rank, TorusGrid};

fn grid_strategy() -> impl Strategy<Value = TorusGrid> {
    (1usize..=3, prop::sample::select(vec![4usize, 6, 8, 12]))
        .prop_filter("keep 3D grids small", |(d, n)| *d < 3 || *n <= 8)
        .prop_map(|(d, n)| TorusGrid::new(d, n).unwrap())
}

fn rank_strategy() -> impl Strategy<Value = Rank> {
    prop::sample::select(vec![Rank::Scalar, Rank::Vector, Rank::Matrix])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn field_file_round_trip_is_bitwise(
        grid in grid_strategy(),
        rank in rank_strategy(),
        seed in any::<u64>(),
        time in any::<f64>(),
        delta in any::<f64>(),
    ) {
        let spec = RandomSpec::band(3).with_mean();
        let f = random_field(grid, rank, &spec, seed, 0);
        let mut buf = Vec::new();
        encode_field(&mut buf, &f, time, delta);
        let (rec, used) = decode_field(&buf).unwrap();
        prop_assert_eq!(used, buf.len());
        prop_assert_eq!(rec.time.to_bits(), time.to_bits());
        prop_assert_eq!(rec.delta.to_bits(), delta.to_bits());
        for (a, b) in rec.field.components().iter().zip(f.components()) {
            prop_assert!(a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }

    #[test]
    fn truncated_field_file_is_rejected(seed in any::<u64>(), cut in 1usize..200) {
        let g = TorusGrid::new(2, 6).unwrap();
        let f = random_field(g, Rank::Vector, &RandomSpec::band(2), seed, 0);
        let mut buf = Vec::new();
        encode_field(&mut buf, &f, 0.0, 0.0);
        let keep = buf.len().saturating_sub(cut);
        prop_assert!(decode_field(&buf[..keep]).is_err());
    }

    #[test]
    fn parseval_and_dealias_projection(grid in grid_strategy(), seed in any::<u64>()) {
        let f = random_field(grid, Rank::Scalar, &RandomSpec::band(8).with_mean(), seed, 1);
        let grid_l2 = norms::lq(&f, 2.0);
        let spec_l2 = norms::l2_spectral(&f);
        prop_assert!((grid_l2 - spec_l2).abs() <= 1e-12 * (1.0 + grid_l2));
        let once = dealias(&f);
        let twice = dealias(&once);
        prop_assert!((&once - &twice).max_abs() <= 1e-14 * (1.0 + once.max_abs()));
        prop_assert!(norms::lq(&once, 2.0) <= grid_l2 * (1.0 + 1e-12));
    }

    #[test]
    fn lame_solve_is_linear_and_inverts(
        d in 1usize..=3,
        lambda_bar in -0.45f64..3.0,
        alpha in -3.0f64..3.0,
        beta in -3.0f64..3.0,
        seed in any::<u64>(),
    ) {
        let n = if d == 3 { 8 } else { 16 };
        let g = TorusGrid::new(d, n).unwrap();
        let p = LameParameter::new(lambda_bar).unwrap();
        let spec = RandomSpec::band(3);
        let f = random_field(g, Rank::Vector, &spec, seed, 0);
        let h = random_field(g, Rank::Vector, &spec, seed, 1);
        let (uf, uh) = (solve_lame(p, &f).unwrap(), solve_lame(p, &h).unwrap());
        let mut comb = f.scaled(alpha);
        comb.axpy(beta, &h);
        let mut expect = uf.scaled(alpha);
        expect.axpy(beta, &uh);
        let got = solve_lame(p, &comb).unwrap();
        prop_assert!((&got - &expect).max_abs() <= 1e-12 * (1.0 + expect.max_abs()));
        let back = apply_lame(p, &uf).unwrap();
        prop_assert!(norms::lq(&(&back - &f), 2.0) <= 1e-10 * norms::lq(&f, 2.0));
    }

    #[test]
    fn coercivity_gap_lower_bound(
        k in 0.0f64..0.5,
        l0 in 0.0f64..1.0,
        seed in any::<u64>(),
    ) {
        let law = ConstitutiveLaw::power_law(1.0, k, 1.0, l0).certified().unwrap();
        let g = TorusGrid::new(2, 16).unwrap();
        let spec = RandomSpec::band(3).with_rms(0.5);
        let u = random_field(g, Rank::Vector, &spec, seed, 0);
        let v = random_field(g, Rank::Vector, &spec, seed, 1);
        let (j, bound) = coercivity_gap(&law, &u, &v).unwrap();
        prop_assert!(j >= bound - 1e-8 * (1.0 + j.abs()), "J = {j}, bound = {bound}");
    }

    #[test]
    fn certification_is_monotone_in_the_base_viscosity(
        mu0 in 0.05f64..2.0,
        extra in 0.0f64..1.0,
        k in 0.0f64..1.0,
    ) {
        let lo = certify(&ConstitutiveLaw::power_law(mu0, k, 1.0, 0.0), DEFAULT_SAMPLES).unwrap();
        let hi = certify(&ConstitutiveLaw::power_law(mu0 + extra, k, 1.0, 0.0), DEFAULT_SAMPLES).unwrap();
        prop_assert!(hi.eps_mu_1 >= lo.eps_mu_1 && hi.eps_mu_2 >= lo.eps_mu_2 && hi.eps_mu >= lo.eps_mu);
        // a law that certifies keeps certifying when its bulk viscosity grows
        let bulk = certify(&ConstitutiveLaw::power_law(mu0, k, 1.0, extra), DEFAULT_SAMPLES).unwrap();
        prop_assert!(bulk.eps_lambda_1 >= lo.eps_lambda_1);
    }

    #[test]
    fn transport_conserves_mass(seed in any::<u64>(), amp in 0.0f64..0.5) {
        let g = TorusGrid::new(2, 16).unwrap();
        let rho0 = random_field(g, Rank::Scalar, &RandomSpec::band(3).with_rms(0.2), seed, 0).map(|r| r + 1.0);
        let w = random_field(g, Rank::Vector, &RandomSpec::band(3).with_rms(amp), seed, 1);
        let cfg = StepConfig::new(0.01, 0.2);
        let tr = transport_stage(&rho0, &Trajectory::constant(w, 0.01, 20), &cfg).unwrap();
        let m0 = rho0.integrals()[0];
        prop_assert!(tr.states().iter().all(|s| (s.integrals()[0] - m0).abs() <= 1e-12 * m0));
    }
}

#[test]
fn empty_rank_field_has_no_valid_encoding() {
    // rank codes above 2 name no field shape
    let g = TorusGrid::new(1, 4).unwrap();
    let mut buf = Vec::new();
    encode_field(&mut buf, &Field::zeros(g, Rank::Scalar), 0.0, 0.0);
    buf[16] = 3;
    assert!(decode_field(&buf).is_err());
}
