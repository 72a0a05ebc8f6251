use heightfrag::csbp::{csbp_sample_path, csbp_terminal_values, CsbpParams};
use heightfrag::measure::{dislocation_mc, phi_closed, DislocationFunctional};
use heightfrag::special::PositiveStable;
use heightfrag::stats::{chi_square_gof, ks_two_sample, quantile, Accumulator};
use heightfrag::subordinator::{
    expected_jump_count, sample_jump_field, size_biased_permutation, ConditionedJumpSampler, StableSampler,
};
use heightfrag::tree::{first_split_partition, sample_skeleton, OffspringLaw, SkeletonTable};
use heightfrag::{Alpha, RngStream};

const SEED: u64 = 77;

fn alpha(a: f64) -> Alpha {
    Alpha::new(a).unwrap()
}

#[test]
fn stable_draws_have_the_right_laplace_transform() {
    let sampler = StableSampler::new(2.0 / 3.0).unwrap();
    let mut rng = RngStream::new(SEED, 1);
    let mut acc = Accumulator::new();
    for _ in 0..1_000_000 {
        acc.push((-sampler.sample(&mut rng)).exp());
    }
    let z = acc.estimate().z_score((-1f64).exp());
    assert!(z < 3.0, "z = {z}");
}

#[test]
fn stable_median_matches_quadrature_cdf() {
    let law = PositiveStable::new(2.0 / 3.0).unwrap();
    let (mut lo, mut hi) = (0.1, 10.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if law.cdf(1.0, mid).unwrap() < 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let median = 0.5 * (lo + hi);
    let sampler = StableSampler::new(2.0 / 3.0).unwrap();
    let mut rng = RngStream::new(SEED, 2);
    let n = 100_000usize;
    let mut xs: Vec<f64> = (0..n).map(|_| sampler.sample(&mut rng)).collect();
    xs.sort_by(f64::total_cmp);
    // order-statistic interval: ranks n/2 ± 3 √n / 2
    let half = 1.5 * (n as f64).sqrt();
    let (i_lo, i_hi) = ((n as f64 / 2.0 - half) as usize, (n as f64 / 2.0 + half) as usize);
    assert!(xs[i_lo] <= median && median <= xs[i_hi], "{} <= {median} <= {}", xs[i_lo], xs[i_hi]);
    assert!((quantile(&xs, 0.5) - median).abs() < 0.05 * median);
}

#[test]
fn stable_time_scaling_in_law() {
    let sampler = StableSampler::new(1.0 / 1.5).unwrap();
    let mut rng = RngStream::new(SEED, 3);
    let at_two: Vec<f64> = (0..100_000).map(|_| sampler.sample_at(2.0, &mut rng)).collect();
    let scaled: Vec<f64> = (0..100_000).map(|_| 2f64.powf(1.5) * sampler.sample(&mut rng)).collect();
    let ks = ks_two_sample(&at_two, &scaled).unwrap();
    assert!(ks.p_value > 0.01, "{ks:?}");
}

#[test]
fn jump_count_is_poisson_with_the_levy_mass() {
    let al = alpha(1.5);
    let mean = expected_jump_count(al, 1.0, 0.01);
    assert!((mean - 8.042_12).abs() < 1e-5, "{mean}");
    let mut rng = RngStream::new(SEED, 4);
    let mut acc = Accumulator::new();
    for _ in 0..100_000 {
        acc.push(sample_jump_field(al, 1.0, 0.01, &mut rng).unwrap().len() as f64);
    }
    let z = acc.estimate().z_score(mean);
    assert!(z < 3.0, "count mean {} vs {mean}, z {z}", acc.mean());
    // Poisson: variance equals the mean
    assert!((acc.variance() / mean - 1.0).abs() < 0.03);
}

#[test]
fn jumps_sum_to_the_subordinator() {
    let al = alpha(1.5);
    let stable = StableSampler::new(al.first_passage_index()).unwrap();
    let mut rng = RngStream::new(SEED, 5);
    let totals: Vec<f64> = (0..10_000).map(|_| sample_jump_field(al, 1.0, 1e-6, &mut rng).unwrap().total()).collect();
    let direct: Vec<f64> = (0..10_000).map(|_| stable.sample(&mut rng)).collect();
    let ks = ks_two_sample(&totals, &direct).unwrap();
    assert!(ks.p_value > 0.01, "{ks:?}");
}

#[test]
fn size_biased_first_pick_frequencies() {
    let mut rng = RngStream::new(SEED, 6);
    let masses = [0.7, 0.2, 0.1];
    let n = 100_000;
    let mut hits = [0usize; 3];
    for _ in 0..n {
        let first = size_biased_permutation(&masses, &mut rng).unwrap()[0];
        hits[masses.iter().position(|&m| m == first).unwrap()] += 1;
    }
    for (m, h) in masses.iter().zip(hits) {
        let p = h as f64 / n as f64;
        assert!((p - m).abs() < 3.0 * (m * (1.0 - m) / n as f64).sqrt(), "{m}: {p}");
    }
    assert_eq!(size_biased_permutation(&[1.0], &mut rng).unwrap(), vec![1.0]);
    assert!(size_biased_permutation(&[0.0, 0.0], &mut rng).is_err());
}

#[test]
fn equal_masses_are_picked_uniformly() {
    // distinguish the two halves by a negligible perturbation
    let mut rng = RngStream::new(SEED, 7);
    let masses = [0.5, 0.5 - 1e-15];
    let n = 100_000;
    let first = (0..n).filter(|_| size_biased_permutation(&masses, &mut rng).unwrap()[0] == masses[0]).count();
    let p = first as f64 / n as f64;
    assert!((p - 0.5).abs() < 3.0 * (0.25 / n as f64).sqrt(), "{p}");
}

#[test]
fn skeleton_shapes_match_their_law() {
    let al = alpha(1.5);
    for n in 2..=5 {
        let table = SkeletonTable::new(n, al).unwrap();
        let mut counts = vec![0u64; table.trees().len()];
        let mut rng = RngStream::new(SEED, 10 + n as u64);
        for _ in 0..100_000 {
            counts[table.sample_index(&mut rng)] += 1;
        }
        if n == 2 {
            assert_eq!(counts, vec![100_000]);
            continue;
        }
        let test = chi_square_gof(&counts, table.probabilities()).unwrap();
        assert!(test.p_value > 0.01, "n {n}: {test:?}");
    }
    let mut rng = RngStream::new(SEED, 20);
    let tree = sample_skeleton(4, al, &mut rng).unwrap();
    let pi = first_split_partition(&tree).unwrap();
    let mut sizes = pi.block_sizes();
    sizes.sort_unstable();
    let root = tree.skeleton();
    let mut leaf_counts: Vec<usize> = root.children(0).iter().map(|&c| root.subtree_leaves(c).len()).collect();
    leaf_counts.sort_unstable();
    assert_eq!(sizes, leaf_counts);
}

#[test]
fn offspring_law_is_critical_with_stable_tail() {
    let law = OffspringLaw::new(alpha(1.5));
    let mut rng = RngStream::new(SEED, 30);
    let n = 10_000_000usize;
    let mut acc = Accumulator::new();
    let mut tail = vec![0u64; 102];
    for _ in 0..n {
        let k = law.sample(&mut rng);
        acc.push(k as f64);
        tail[k.min(101)] += 1;
    }
    // infinite variance: the standard error is only indicative here
    assert!(acc.estimate().z_score(1.0) < 3.0, "mean {}", acc.mean());
    // survival counts P(ξ >= k)
    let mut surv = vec![0u64; 102];
    let mut running = 0;
    for k in (0..102).rev() {
        running += tail[k];
        surv[k] = running;
    }
    let pts: Vec<(f64, f64)> = (10..=100).map(|k| ((k as f64).ln(), (surv[k] as f64 / n as f64).ln())).collect();
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
    let slope =
        pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    // the pmf exponent is the survival exponent minus one
    let pmf_exponent = slope - 1.0;
    assert!((pmf_exponent + 2.5).abs() < 0.1, "{pmf_exponent}");
}

#[test]
fn csbp_branching_property() {
    let al = alpha(1.5);
    let (t, dt, n) = (0.5, 0.01, 10_000);
    let half = CsbpParams::new(al, 0.5).unwrap();
    let a = csbp_terminal_values(half, t, dt, n, 0.05, &RngStream::new(SEED, 40)).unwrap();
    let b = csbp_terminal_values(half, t, dt, n, 0.05, &RngStream::new(SEED, 41)).unwrap();
    let one =
        csbp_terminal_values(CsbpParams::new(al, 1.0).unwrap(), t, dt, n, 0.05, &RngStream::new(SEED, 42)).unwrap();
    let sums: Vec<f64> = a.values.iter().zip(&b.values).map(|(x, y)| x + y).collect();
    let ks = ks_two_sample(&sums, &one.values).unwrap();
    assert!(ks.p_value > 0.01, "{ks:?}");

    let zero = csbp_sample_path(CsbpParams::new(al, 0.0).unwrap(), 1.0, 0.01, &mut RngStream::new(SEED, 43)).unwrap();
    assert!(zero.values.iter().all(|&v| v == 0.0));
}

#[test]
fn largest_below_grows_as_the_threshold_shrinks() {
    let al = alpha(1.5);
    let rng = RngStream::new(SEED, 50);
    let estimates: Vec<f64> = [0.5, 0.3, 0.1, 0.03]
        .into_iter()
        .map(|delta| {
            dislocation_mc(DislocationFunctional::LargestBelow { delta }, al, 20_000, 1e-6, &rng).unwrap().estimate
        })
        .collect();
    assert!(estimates.windows(2).all(|w| w[1] > w[0]), "{estimates:?}");
    assert!(estimates[0] > 0.0);
}

#[test]
fn largest_below_is_stable_under_epsilon_halving() {
    let al = alpha(1.5);
    let est =
        dislocation_mc(DislocationFunctional::LargestBelow { delta: 0.3 }, al, 50_000, 1e-6, &RngStream::new(SEED, 51))
            .unwrap();
    assert!(est.estimate.is_finite() && est.estimate > 0.0);
    assert!(est.epsilon_sensitivity() < 3.0, "{est:?}");
}

#[test]
fn size_biased_complement_matches_power_sum_one() {
    // ν₋(1 - s*) = ν₋(1 - Σ s_i²) = Φ(1)
    let al = alpha(1.5);
    let est = dislocation_mc(DislocationFunctional::SizeBiasedComplement, al, 100_000, 1e-6, &RngStream::new(SEED, 52))
        .unwrap();
    assert!(est.epsilon_sensitivity() < 1.0, "{est:?}");
    let z = est.z_score(phi_closed(1.0, al));
    assert!(z.abs() < 3.0, "estimate {} +- {}, z {z}", est.estimate, est.std_error);
}

#[test]
fn conditioned_jumps_replay_and_stay_in_support() {
    let sampler = ConditionedJumpSampler::new(alpha(1.5)).unwrap();
    let run = |stream| {
        let mut rng = RngStream::new(SEED, stream);
        (0..50).map(|_| sampler.sample_in_order(1.0, 2.0, 10_000, 1e-6, &mut rng).unwrap()).collect::<Vec<_>>()
    };
    let a = run(60);
    assert_eq!(a, run(60));
    for (order, seq) in &a {
        let mut rem = 2.0;
        for &y in order {
            assert!(y > 0.0 && y < rem);
            rem -= y;
        }
        assert!((seq.jumps().iter().sum::<f64>() + seq.residual() - 2.0).abs() < 1e-12);
    }
}
