//! Property tests over random instances.

#![allow(clippy::needless_range_loop)]

use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scma_core::channel::{
    complex_gaussian, effective_row, noise_variance, superimpose, transmit, ChannelRealization, EffectiveRow,
};
use scma_core::codebook::{lattice_point, symbol_index, RotationMatrix};
use scma_core::coding::Interleaver;
use scma_core::format::{parse_codebook, parse_indicator, write_codebook, write_indicator};
use scma_core::lsd_mpa::{CrossSubcarrierPruner, DecoderVariant, ExclusionMask};
use scma_core::mpa::{layer_update, posterior, resource_update, MaxStarMode, MessageTable, ResourceHypotheses};
use scma_core::oracle::brute_force_ml;
use scma_core::sphere::{augment_and_factor, initial_radius, lsd_search, NoFilter, RadiusPolicy};
use scma_core::{Codebook, CodebookParams, DecoderKind, Detector, RotationStyle, C64};

fn style() -> impl Strategy<Value = RotationStyle> {
    prop_oneof![
        Just(RotationStyle::Identity),
        Just(RotationStyle::Lnp),
        Just(RotationStyle::Diversity)
    ]
}

fn params() -> impl Strategy<Value = CodebookParams> {
    (
        prop_oneof![Just((6, 4)), Just((12, 6))],
        prop_oneof![Just(4usize), Just(16)],
        style(),
    )
        .prop_map(|((k, n), m, style)| CodebookParams { k, n, p: 2, m, style })
}

fn small() -> Codebook {
    Codebook::build(CodebookParams {
        k: 6,
        n: 4,
        p: 2,
        m: 4,
        style: RotationStyle::Diversity,
    })
    .unwrap()
}

fn random_row(rng: &mut ChaCha8Rng, users: usize, dims: usize) -> EffectiveRow {
    EffectiveRow {
        resource: 0,
        coeffs: (0..users * dims).map(|_| complex_gaussian(rng, 1.0)).collect(),
        users: (0..users).collect(),
        dims,
    }
}

fn use_at(cb: &Codebook, ebno: f64, rng: &mut ChaCha8Rng) -> (Vec<usize>, Vec<C64>, ChannelRealization) {
    let ch =
        ChannelRealization::rayleigh(cb.n(), cb.k(), noise_variance(ebno, 1.0, cb.bits_per_symbol()), rng).unwrap();
    let symbols: Vec<usize> = (0..cb.k()).map(|_| rng.random_range(0..cb.m())).collect();
    let y = transmit(cb, &symbols, &ch, rng);
    (symbols, y, ch)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rotations_are_orthogonal(dim in prop_oneof![Just(2usize), Just(4)], s in style()) {
        let r = RotationMatrix::for_dimension(dim, s).unwrap();
        prop_assert!(r.orthogonality_defect() < 1e-12);
    }

    #[test]
    fn codebooks_are_sparse_unit_energy_and_distinct(p in params()) {
        let cb = Codebook::build(p).unwrap();
        let graph = cb.factor_graph();
        for k in 0..cb.k() {
            prop_assert!((cb.average_energy(k) - 1.0).abs() < 1e-9);
            let layer = cb.layer(k);
            let rows: BTreeSet<usize> = layer.mapping().rows().iter().copied().collect();
            prop_assert_eq!(rows.iter().copied().collect::<Vec<_>>(), graph.zeta(k).to_vec());
            for x in layer.codewords() {
                for (n, v) in x.iter().enumerate() {
                    if !rows.contains(&n) {
                        prop_assert_eq!(*v, C64::new(0.0, 0.0));
                    }
                }
            }
            for a in 0..cb.m() {
                for b in a + 1..cb.m() {
                    let d: f64 = layer.codeword(a).iter().zip(layer.codeword(b)).map(|(x, y)| (x - y).norm_sqr()).sum();
                    prop_assert!(d > 1e-9);
                }
            }
        }
    }

    #[test]
    fn factor_graph_is_regular(p in params()) {
        let graph = Codebook::build(p).unwrap().factor_graph();
        let dc = p.k * p.p / p.n;
        prop_assert_eq!(graph.dc(), dc);
        for n in 0..graph.n() {
            prop_assert_eq!(graph.xi(n).len(), dc);
        }
        for k in 0..graph.k() {
            prop_assert_eq!(graph.zeta(k).len(), p.p);
        }
    }

    #[test]
    fn effective_rows_reproduce_superposition(p in params(), seed in any::<u64>()) {
        let cb = Codebook::build(p).unwrap();
        prop_assume!(cb.is_lattice());
        let graph = cb.factor_graph();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ch = ChannelRealization::rayleigh(cb.n(), cb.k(), 1.0, &mut rng).unwrap();
        let symbols: Vec<usize> = (0..cb.k()).map(|_| rng.random_range(0..cb.m())).collect();
        let y = superimpose(&cb, &symbols, &ch);
        let d = cb.bits_per_symbol();
        for n in 0..cb.n() {
            let row = effective_row(&cb, &graph, &ch, n).unwrap();
            let u: Vec<i8> = row.users.iter().flat_map(|&k| lattice_point(symbols[k], d)).collect();
            prop_assert!((row.apply(&u) - y[n]).norm() < 1e-9);
            for (slot, &k) in row.users.iter().enumerate() {
                prop_assert_eq!(symbol_index(&u[row.user_span(slot)]), symbols[k]);
            }
        }
    }

    #[test]
    fn maxlog_argmax_ignores_prior_offsets(seed in any::<u64>(), shift in -20.0f64..20.0, layer in 0usize..6) {
        let cb = small();
        let graph = cb.factor_graph();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (_, y, ch) = use_at(&cb, rng.random_range(0.0..15.0), &mut rng);
        let hyps: Vec<ResourceHypotheses> = (0..4)
            .map(|n| ResourceHypotheses::exhaustive(&cb, &graph, y[n], &ch, n, vec![(0..4).map(|i| vec![i]).collect(); 3]))
            .collect();
        let priors: Vec<f64> = (0..24).map(|_| rng.random_range(-3.0..3.0)).collect();
        let mut shifted = priors.clone();
        for v in &mut shifted[layer * 4..layer * 4 + 4] {
            *v += shift;
        }
        let run = |pr: Vec<f64>| {
            let mut table = MessageTable::new(&graph, 4, pr);
            for _ in 0..5 {
                for h in &hyps {
                    resource_update(&mut table, h, MaxStarMode::MaxLog);
                }
                for k in 0..6 {
                    for &n in graph.zeta(k) {
                        layer_update(&mut table, &graph, k, n);
                    }
                }
            }
            (0..6).map(|k| posterior(&table, &graph, k)).collect::<Vec<_>>()
        };
        let argmax = |post: &Vec<Option<f64>>| {
            (0..post.len()).max_by(|&a, &b| post[a].unwrap_or(f64::NEG_INFINITY).total_cmp(&post[b].unwrap_or(f64::NEG_INFINITY))).unwrap()
        };
        let (a, b) = (run(priors), run(shifted));
        for (pa, pb) in a.iter().zip(&b) {
            prop_assert_eq!(argmax(pa), argmax(pb));
            for v in pa.iter().chain(pb) {
                prop_assert!(v.is_none_or(|x| x.is_finite()));
            }
        }
    }

    #[test]
    fn regularizer_preserves_ranking(seed in any::<u64>(), users in 1usize..=4, alpha in 0.05f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let row = random_row(&mut rng, users, 2);
        let y = complex_gaussian(&mut rng, 2.0);
        let sys = augment_and_factor(&row, y, alpha);
        let oracle = brute_force_ml(y, &row).unwrap();
        let l = row.len() as f64;
        for (u, d) in &oracle.ranking {
            let augmented = sys.augmented_distance(u);
            prop_assert!((augmented - (d + alpha * alpha * l)).abs() < 1e-9 * (1.0 + augmented));
        }
    }

    #[test]
    fn finite_radius_keeps_every_point_inside(seed in any::<u64>(), users in 1usize..=4, scale in 0.1f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let row = random_row(&mut rng, users, 2);
        let y = complex_gaussian(&mut rng, 2.0);
        let sys = augment_and_factor(&row, y, 0.3);
        let all: Vec<(Vec<i8>, f64)> = brute_force_ml(y, &row)
            .unwrap()
            .ranking
            .into_iter()
            .map(|(u, _)| { let d = sys.reduced_distance(&u); (u, d) })
            .collect();
        let radius = all.iter().map(|p| p.1).fold(0.0, f64::max) * scale / 3.0;
        let (list, stats) = lsd_search(&sys, radius, all.len(), 2, &NoFilter).unwrap();
        let got: BTreeSet<Vec<i8>> = list.entries().iter().map(|e| e.0.clone()).collect();
        let want: BTreeSet<Vec<i8>> = all.iter().filter(|p| p.1 <= radius).map(|p| p.0.clone()).collect();
        prop_assert_eq!(got, want);
        let eq33: u64 = stats.visited.iter().enumerate().map(|(i, &v)| (2 * (i as u64 + 1) + 7) * v).sum();
        prop_assert_eq!(stats.flops(), eq33);
    }

    #[test]
    fn full_list_reproduces_maxlog(seed in any::<u64>()) {
        let cb = small();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (_, y, ch) = use_at(&cb, rng.random_range(0.0..20.0), &mut rng);
        let priors: Vec<f64> = (0..12).map(|_| rng.random_range(-5.0..5.0)).collect();
        let a = Detector::new(DecoderVariant::new(DecoderKind::MaxLogMpa, 1, 5), &cb).unwrap().detect(&y, &ch, &priors).unwrap();
        let b = Detector::new(DecoderVariant::new(DecoderKind::LsdMpa, 64, 5), &cb).unwrap().detect(&y, &ch, &priors).unwrap();
        for (x, z) in a.llr.bit_llr.iter().zip(&b.llr.bit_llr) {
            prop_assert!((x - z).abs() < 1e-9);
        }
    }

    // With a fixed radius and a list that never fills, the pruned list is the
    // unpruned one minus exactly the entries holding an excluded symbol.
    #[test]
    fn cross_subcarrier_pruning_drops_only_excluded_entries(seed in any::<u64>()) {
        let cb = small();
        let graph = cb.factor_graph();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (_, y, ch) = use_at(&cb, rng.random_range(4.0..20.0), &mut rng);
        let sigma2 = ch.noise_var();
        let alpha = sigma2.sqrt();
        let groups: Vec<Vec<Vec<usize>>> = vec![(0..4).map(|i| vec![i]).collect(); graph.dc()];
        let mut mask = ExclusionMask::new(6, 4);
        for n in (0..4).rev() {
            let row = effective_row(&cb, &graph, &ch, n).unwrap();
            let sys = augment_and_factor(&row, y[n], alpha);
            let radius = initial_radius(RadiusPolicy::ChiSquare { epsilon: 0.001, sigma2 }, sys.depth(), alpha).unwrap();
            let pruner = CrossSubcarrierPruner::new(&mask, &row.users, &groups, 2);
            let (full, s_full) = lsd_search(&sys, radius, 64, 2, &NoFilter).unwrap();
            let (pruned, s_pruned) = lsd_search(&sys, radius, 64, 2, &pruner).unwrap();
            prop_assert!(s_pruned.total_visited() <= s_full.total_visited());
            let kept: BTreeSet<Vec<i8>> = full
                .entries()
                .iter()
                .filter(|(u, _)| (0..row.users.len()).all(|j| !mask.is_excluded(row.users[j], symbol_index(&u[2 * j..2 * j + 2]))))
                .map(|(u, _)| u.clone())
                .collect();
            let got: BTreeSet<Vec<i8>> = pruned.entries().iter().map(|(u, _)| u.clone()).collect();
            prop_assert_eq!(got, kept);
            mask.absorb(&pruned, &row.users, &groups, 2);
        }
    }

    #[test]
    fn detection_is_deterministic(seed in any::<u64>(), kind in prop::sample::select(vec![DecoderKind::MaxLogMpa, DecoderKind::LsdMpa, DecoderKind::NpLsdMpa])) {
        let cb = small();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (_, y, ch) = use_at(&cb, 8.0, &mut rng);
        let det = Detector::new(DecoderVariant::new(kind, 16, 5), &cb).unwrap();
        prop_assert_eq!(det.detect(&y, &ch, &[0.0; 12]).unwrap(), det.detect(&y, &ch, &[0.0; 12]).unwrap());
    }

    #[test]
    fn interleaver_round_trips(len in 1usize..5000, seed in any::<u64>()) {
        let il = Interleaver::random(len, seed);
        let x: Vec<u32> = (0..len as u32).collect();
        let y = il.interleave(&x);
        prop_assert_eq!(y.iter().copied().collect::<BTreeSet<_>>().len(), len);
        prop_assert_eq!(il.deinterleave(&y), x);
    }

    #[test]
    fn codebook_text_round_trips(p in params()) {
        let cb = Codebook::build(p).unwrap();
        let back = parse_codebook(&write_codebook(&cb)).unwrap();
        prop_assert_eq!((back.k(), back.n(), back.m()), (cb.k(), cb.n(), cb.m()));
        for k in 0..cb.k() {
            prop_assert_eq!(back.layer(k).codewords(), cb.layer(k).codewords());
        }
        prop_assert_eq!(back.is_lattice(), cb.is_lattice());
    }

    #[test]
    fn indicator_text_round_trips(n in 1usize..12, k in 1usize..16, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = scma_core::format::IndicatorMatrix { n, k, entries: (0..n * k).map(|_| rng.random_range(0..2u8)).collect() };
        prop_assert_eq!(parse_indicator(&write_indicator(&f)).unwrap(), f);
    }

    #[test]
    fn parsers_never_panic(text in "\\PC{0,400}") {
        let _ = parse_codebook(&text);
        let _ = parse_indicator(&text);
    }

    #[test]
    fn parsers_never_panic_on_plausible_input(
        header in prop::collection::vec(0usize..20, 0..5),
        body in prop::collection::vec("(-?[0-9]{1,3}(\\.[0-9]{1,3})?,-?[0-9]{1,3}|[01]|#.*| )", 0..80),
    ) {
        let mut text = header.iter().map(usize::to_string).collect::<Vec<_>>().join(" ");
        for tok in body {
            text.push(if tok.len() % 3 == 0 { '\n' } else { ' ' });
            text.push_str(&tok);
        }
        let _ = parse_codebook(&text);
        let _ = parse_indicator(&text);
    }
}
