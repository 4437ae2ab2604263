//! Brute-force oracle checks: every numerical shortcut in the library is
//! held against an exhaustive reference computed from scratch.

use coloc::costs::{default_clamp_delta, deviation_matrix, rejection_cost, CostMatrix};
use coloc::geometry::{iou, round_to_box, BoundingBox, BoxVector};
use coloc::imagery::{binarize, otsu_threshold, EdgeProfile, GrayMap};
use coloc::prior::{absolute_prior, QualityScores};
use coloc::solver::{solve_qp, ReferenceSet, RejectionCosts};
use coloc::synth::Rng64;

/// Exhaustive Otsu search: for every candidate level, repartition the
/// pixels from scratch and compute the between-class variance from exact
/// integer sums. Both routes share only the final exact-integer variance
/// expression, so an argmax tie cannot resolve differently.
fn otsu_brute_level(map: &GrayMap) -> Option<usize> {
    let quantized = map.quantized();
    let mut best: Option<(usize, f64)> = None;
    for level in 0..256usize {
        let (mut n0, mut s0, mut n1, mut s1) = (0u64, 0u64, 0u64, 0u64);
        for &q in &quantized {
            if usize::from(q) <= level {
                n0 += 1;
                s0 += u64::from(q);
            } else {
                n1 += 1;
                s1 += u64::from(q);
            }
        }
        if n0 == 0 || n1 == 0 {
            continue;
        }
        let d = s0 as i128 * n1 as i128 - s1 as i128 * n0 as i128;
        let variance = (d * d) as f64 / (n0 as f64 * n1 as f64);
        if best.is_none_or(|(_, v)| variance > v) {
            best = Some((level, variance));
        }
    }
    best.map(|(level, _)| level)
}

fn random_map(rng: &mut Rng64, width: u32, height: u32) -> GrayMap {
    GrayMap::from_fn(width, height, |_, _| {
        f64::from(rng.range_u32(0, 255)) / 255.0
    })
    .unwrap()
}

#[test]
fn otsu_matches_exhaustive_search_on_random_maps() {
    let mut rng = Rng64::new(0x75u64);
    for round in 0..100 {
        let map = random_map(&mut rng, 32, 32);
        let level = otsu_brute_level(&map).expect("random maps are not degenerate");
        let threshold = otsu_threshold(&map).unwrap();
        let fast = binarize(&map, threshold);
        let brute = binarize(&map, level as f64 / 255.0);
        assert_eq!(fast, brute, "round {round}: masks diverge at level {level}");
    }
}

#[test]
fn otsu_matches_oracle_on_sparse_histograms() {
    // few distinct levels make argmax ties likely
    let mut rng = Rng64::new(99);
    for _ in 0..100 {
        let levels: Vec<u32> = (0..rng.range_u32(2, 4))
            .map(|_| rng.range_u32(0, 255))
            .collect();
        let map = GrayMap::from_fn(16, 16, |_, _| {
            f64::from(levels[rng.range_u32(0, levels.len() as u32 - 1) as usize]) / 255.0
        })
        .unwrap();
        match (otsu_brute_level(&map), otsu_threshold(&map)) {
            (Some(level), Ok(threshold)) => {
                assert_eq!(
                    binarize(&map, threshold),
                    binarize(&map, level as f64 / 255.0)
                );
            }
            (None, Err(_)) => {}
            (brute, fast) => panic!("oracle {brute:?} disagrees with {fast:?}"),
        }
    }
}

/// Pixel-membership IoU: count intersection and union by testing every
/// pixel of the frame against both boxes.
fn iou_brute(a: &BoundingBox, b: &BoundingBox, width: u32, height: u32) -> f64 {
    let mut intersection = 0u64;
    let mut union = 0u64;
    for row in 0..height {
        for col in 0..width {
            let in_a = a.contains_pixel(row, col);
            let in_b = b.contains_pixel(row, col);
            if in_a && in_b {
                intersection += 1;
            }
            if in_a || in_b {
                union += 1;
            }
        }
    }
    intersection as f64 / union as f64
}

fn random_box(rng: &mut Rng64, width: u32, height: u32) -> BoundingBox {
    let t = rng.range_u32(0, height - 2);
    let b = rng.range_u32(t + 1, height - 1);
    let l = rng.range_u32(0, width - 2);
    let r = rng.range_u32(l + 1, width - 1);
    BoundingBox::new(t, b, l, r).unwrap()
}

#[test]
fn iou_matches_pixel_enumeration() {
    let mut rng = Rng64::new(0x10_u64);
    for _ in 0..500 {
        let a = random_box(&mut rng, 64, 64);
        let b = random_box(&mut rng, 64, 64);
        let fast = iou(&a, &b);
        let brute = iou_brute(&a, &b, 64, 64);
        assert!(
            (fast - brute).abs() < 1e-12,
            "iou mismatch for {a:?} vs {b:?}: {fast} vs {brute}"
        );
    }
}

#[test]
fn spec_iou_example_against_oracle() {
    let a = BoundingBox::new(0, 9, 0, 9).unwrap();
    let b = BoundingBox::new(5, 14, 5, 14).unwrap();
    let brute = iou_brute(&a, &b, 64, 64);
    assert!((brute - 25.0 / 175.0).abs() < 1e-15);
    assert!((iou(&a, &b) - brute).abs() < 1e-15);
}

/// Full 4x4 quadratic form, the independent objective route.
fn objective_full(z: [f64; 4], refs: &ReferenceSet, costs: &RejectionCosts) -> f64 {
    let mut total = 0.0;
    for (reference, cost) in [
        (refs.z_c, costs.c),
        (refs.z_s, costs.s),
        (refs.z_o, costs.o),
    ] {
        let m = cost.as_matrix();
        let rv = reference.to_vector().components();
        let d: Vec<f64> = z.iter().zip(rv).map(|(zi, ri)| zi - ri).collect();
        for i in 0..4 {
            for j in 0..4 {
                total += d[i] * m[i][j] * d[j];
            }
        }
    }
    total
}

struct QpInstance {
    refs: ReferenceSet,
    costs: RejectionCosts,
    edges: EdgeProfile,
    width: u32,
    height: u32,
}

fn random_instance(rng: &mut Rng64) -> QpInstance {
    let width = rng.range_u32(8, 64);
    let height = rng.range_u32(8, 64);
    let row_lo = rng.range_u32(0, height - 2);
    let row_hi = rng.range_u32(row_lo + 1, height - 1);
    let col_lo = rng.range_u32(0, width - 2);
    let col_hi = rng.range_u32(col_lo + 1, width - 1);
    let edges = EdgeProfile::new(vec![row_lo, row_hi], vec![col_lo, col_hi]).unwrap();

    let feasible_box = |rng: &mut Rng64| -> BoundingBox {
        let t = rng.range_u32(row_lo, row_hi - 1);
        let b = rng.range_u32(t + 1, row_hi);
        let l = rng.range_u32(col_lo, col_hi - 1);
        let r = rng.range_u32(l + 1, col_hi);
        BoundingBox::new(t, b, l, r).unwrap()
    };
    let refs = ReferenceSet {
        z_c: feasible_box(rng),
        z_s: feasible_box(rng),
        z_o: feasible_box(rng),
    };

    let random_cost = |rng: &mut Rng64| -> CostMatrix {
        let mut diag = [0.0; 4];
        for d in diag.iter_mut() {
            // occasional exact zeros exercise flat coordinates
            *d = if rng.next_f64() < 0.15 {
                0.0
            } else {
                rng.next_f64() * 5.0
            };
        }
        CostMatrix::from_diagonal(diag).unwrap()
    };
    let costs = RejectionCosts {
        c: random_cost(rng),
        s: random_cost(rng),
        o: random_cost(rng),
    };
    QpInstance {
        refs,
        costs,
        edges,
        width,
        height,
    }
}

/// Exhaustive integer-grid minimum. The objective has no cross terms, so
/// the vertical and horizontal pairs enumerate independently; the composed
/// best box is re-scored through the full quadratic form as a sanity
/// check on the decomposition.
fn grid_best(instance: &QpInstance) -> f64 {
    let (row_lo, row_hi) = instance.edges.row_span();
    let (col_lo, col_hi) = instance.edges.col_span();
    let refs = &instance.refs;
    let costs = &instance.costs;

    let axis_cost = |lo_idx: usize, hi_idx: usize, lo_v: u32, hi_v: u32| -> (f64, u32, u32) {
        let mut best = (f64::INFINITY, 0u32, 0u32);
        for low in lo_v..hi_v {
            for high in (low + 1)..=hi_v {
                let mut total = 0.0;
                for (reference, cost) in [
                    (refs.z_c, costs.c),
                    (refs.z_s, costs.s),
                    (refs.z_o, costs.o),
                ] {
                    let comps = reference.components();
                    let diag = cost.diagonal();
                    let dl = f64::from(low) - f64::from(comps[lo_idx]);
                    let dh = f64::from(high) - f64::from(comps[hi_idx]);
                    total += diag[lo_idx] * dl * dl + diag[hi_idx] * dh * dh;
                }
                if total < best.0 {
                    best = (total, low, high);
                }
            }
        }
        best
    };

    let (vertical, t, b) = axis_cost(0, 1, row_lo, row_hi);
    let (horizontal, l, r) = axis_cost(2, 3, col_lo, col_hi);
    let composed = objective_full(
        [f64::from(t), f64::from(b), f64::from(l), f64::from(r)],
        refs,
        costs,
    );
    assert!(
        (composed - (vertical + horizontal)).abs() <= 1e-9 * (1.0 + composed.abs()),
        "axis decomposition broke: {composed} vs {}",
        vertical + horizontal
    );
    vertical + horizontal
}

#[test]
fn qp_beats_or_ties_the_integer_grid() {
    let mut rng = Rng64::new(0x95u64);
    for round in 0..200 {
        let instance = random_instance(&mut rng);
        let v = solve_qp(&instance.refs, &instance.costs, &instance.edges).unwrap();
        let rounded = round_to_box(&v, instance.width, instance.height);
        let [t, b, l, r] = rounded.components();
        let obj = objective_full(
            [f64::from(t), f64::from(b), f64::from(l), f64::from(r)],
            &instance.refs,
            &instance.costs,
        );
        let best = grid_best(&instance);
        assert!(
            obj <= best + 1e-6 * (1.0 + best.abs()),
            "round {round}: rounded objective {obj} exceeds grid best {best}"
        );

        // the returned box satisfies every constraint
        let (row_lo, row_hi) = instance.edges.row_span();
        let (col_lo, col_hi) = instance.edges.col_span();
        assert!(t >= row_lo && b <= row_hi && b > t);
        assert!(l >= col_lo && r <= col_hi && r > l);
    }
}

#[test]
fn qp_handles_references_outside_the_feasible_region() {
    // map-derived reference boxes are not confined to the edge bounds, so
    // the solver must stay exact when every pull points outside
    let mut rng = Rng64::new(0x0DD);
    for round in 0..200 {
        let width = rng.range_u32(12, 64);
        let height = rng.range_u32(12, 64);
        let row_lo = rng.range_u32(2, height - 4);
        let row_hi = rng.range_u32(row_lo + 1, height - 3);
        let col_lo = rng.range_u32(2, width - 4);
        let col_hi = rng.range_u32(col_lo + 1, width - 3);
        let edges = EdgeProfile::new(vec![row_lo, row_hi], vec![col_lo, col_hi]).unwrap();

        // references roam the whole image
        let refs = ReferenceSet {
            z_c: random_box(&mut rng, width, height),
            z_s: random_box(&mut rng, width, height),
            z_o: random_box(&mut rng, width, height),
        };
        let random_cost = |rng: &mut Rng64| -> CostMatrix {
            let mut diag = [0.0; 4];
            for d in diag.iter_mut() {
                *d = if rng.next_f64() < 0.15 { 0.0 } else { rng.next_f64() * 5.0 };
            }
            CostMatrix::from_diagonal(diag).unwrap()
        };
        let costs = RejectionCosts {
            c: random_cost(&mut rng),
            s: random_cost(&mut rng),
            o: random_cost(&mut rng),
        };
        let instance = QpInstance { refs, costs, edges, width, height };

        let v = solve_qp(&instance.refs, &instance.costs, &instance.edges).unwrap();
        let rounded = round_to_box(&v, width, height);
        let [t, b, l, r] = rounded.components();
        let obj = objective_full(
            [f64::from(t), f64::from(b), f64::from(l), f64::from(r)],
            &instance.refs,
            &instance.costs,
        );
        let best = grid_best(&instance);
        assert!(
            obj <= best + 1e-6 * (1.0 + best.abs()),
            "round {round}: {obj} exceeds grid best {best}"
        );
        assert!(t >= row_lo && b <= row_hi && l >= col_lo && r <= col_hi);
    }
}

#[test]
fn qp_spec_example_boundary_activation() {
    // weighted average violating b >= t + 1 lands on the boundary, checked
    // against the grid in a 64-row image
    let refs = ReferenceSet {
        z_c: BoundingBox::new(40, 41, 10, 50).unwrap(),
        z_s: BoundingBox::new(19, 20, 10, 50).unwrap(),
        z_o: BoundingBox::new(30, 31, 10, 50).unwrap(),
    };
    let costs = RejectionCosts {
        c: CostMatrix::from_diagonal([3.0, 0.0, 1.0, 1.0]).unwrap(),
        s: CostMatrix::from_diagonal([0.0, 3.0, 1.0, 1.0]).unwrap(),
        o: CostMatrix::from_diagonal([0.5, 0.5, 0.5, 0.5]).unwrap(),
    };
    let edges = EdgeProfile::new((0..64).collect(), (0..64).collect()).unwrap();
    let instance = QpInstance {
        refs,
        costs,
        edges,
        width: 64,
        height: 64,
    };

    let v = solve_qp(&instance.refs, &instance.costs, &instance.edges).unwrap();
    assert!(v.b - v.t >= 1.0 - 1e-12);
    assert!(
        (v.b - v.t - 1.0).abs() < 1e-9,
        "expected the ordering face active, got {v:?}"
    );

    let rounded = round_to_box(&v, 64, 64);
    let [t, b, l, r] = rounded.components();
    let obj = objective_full(
        [f64::from(t), f64::from(b), f64::from(l), f64::from(r)],
        &instance.refs,
        &instance.costs,
    );
    let best = grid_best(&instance);
    assert!(obj <= best + 1e-6 * (1.0 + best.abs()));
}

#[test]
fn rejection_cost_matches_naive_elementwise_oracle() {
    let mut rng = Rng64::new(7777);
    for _ in 0..200 {
        let width = rng.range_u32(8, 100);
        let height = rng.range_u32(8, 100);
        let a = random_box(&mut rng, width, height);
        let k = random_box(&mut rng, width, height);
        let delta = default_clamp_delta(width, height);

        // naive route: build the full deviation matrix, apply the formula
        // entry by entry
        let j = iou(&a, &k);
        let rho = deviation_matrix(&a, &k, width, height);
        let mut naive = [[0.0f64; 4]; 4];
        for i in 0..4 {
            for jj in 0..4 {
                naive[i][jj] = -j * rho[i][jj].clamp(delta, 1.0).ln();
            }
        }

        let fast = rejection_cost(&a, &k, width, height, delta)
            .unwrap()
            .as_matrix();
        for i in 0..4 {
            for jj in 0..4 {
                assert_eq!(
                    fast[i][jj], naive[i][jj],
                    "entry ({i},{jj}) differs for {a:?} vs {k:?}"
                );
            }
        }
    }
}

#[test]
fn quality_weighted_prior_hand_values() {
    // phi(S) = 0.4, phi(C) = 25/255; pixel (0,0) fuses, everything else
    // copies S (see the prior module's fixture notes)
    let s = GrayMap::new(2, 2, vec![0.2, 0.4, 0.9, 0.9]).unwrap();
    let c = GrayMap::new(2, 2, vec![0.8, 0.1, 0.1, 0.9]).unwrap();

    let equal = QualityScores::new(0.5, 0.5).unwrap();
    let a = absolute_prior(&s, &c, &equal).unwrap();
    assert!((a.get(0, 0) - 0.5).abs() < 1e-9);

    let skewed = QualityScores::new(0.25, 0.75).unwrap();
    let a = absolute_prior(&s, &c, &skewed).unwrap();
    assert!((a.get(0, 0) - 0.65).abs() < 1e-9);
}

#[test]
fn solve_qp_scaling_leaves_argmin_unchanged() {
    let mut rng = Rng64::new(2024);
    for _ in 0..50 {
        let instance = random_instance(&mut rng);
        let base = solve_qp(&instance.refs, &instance.costs, &instance.edges).unwrap();
        for factor in [0.1, 3.0, 100.0] {
            let scaled = RejectionCosts {
                c: instance.costs.c.scaled(factor).unwrap(),
                s: instance.costs.s.scaled(factor).unwrap(),
                o: instance.costs.o.scaled(factor).unwrap(),
            };
            let v = solve_qp(&instance.refs, &scaled, &instance.edges).unwrap();
            for (a, b) in v.components().iter().zip(base.components()) {
                assert!(
                    (a - b).abs() <= 1e-9 * (1.0 + b.abs()),
                    "argmin moved under scaling by {factor}: {v:?} vs {base:?}"
                );
            }
            assert_eq!(
                round_to_box(&v, instance.width, instance.height),
                round_to_box(&base, instance.width, instance.height)
            );
        }
    }
}

#[test]
fn round_to_box_never_leaves_the_feasible_region() {
    // rounding a feasible continuous solution cannot break feasibility:
    // bounds are integers and the ordering margin is a full pixel
    let mut rng = Rng64::new(31337);
    for _ in 0..200 {
        let instance = random_instance(&mut rng);
        let v = solve_qp(&instance.refs, &instance.costs, &instance.edges).unwrap();
        let (row_lo, row_hi) = instance.edges.row_span();
        let (col_lo, col_hi) = instance.edges.col_span();
        assert!(v.t >= f64::from(row_lo) - 1e-9 && v.b <= f64::from(row_hi) + 1e-9);
        assert!(v.l >= f64::from(col_lo) - 1e-9 && v.r <= f64::from(col_hi) + 1e-9);

        let rounded = round_to_box(&v, instance.width, instance.height);
        let [t, b, l, r] = rounded.components();
        assert!(t >= row_lo && b <= row_hi && l >= col_lo && r <= col_hi);
        assert!(b > t && r > l);
    }
}

#[test]
fn pinning_when_all_references_agree() {
    let mut rng = Rng64::new(555);
    for _ in 0..50 {
        let width = rng.range_u32(8, 64);
        let height = rng.range_u32(8, 64);
        let target = random_box(&mut rng, width, height);
        let refs = ReferenceSet {
            z_c: target,
            z_s: target,
            z_o: target,
        };
        let mut diag = [0.0; 4];
        for d in diag.iter_mut() {
            *d = 0.1 + rng.next_f64() * 4.0;
        }
        let costs = RejectionCosts {
            c: CostMatrix::from_diagonal(diag).unwrap(),
            s: CostMatrix::from_diagonal(diag).unwrap(),
            o: CostMatrix::from_diagonal(diag).unwrap(),
        };
        let edges = EdgeProfile::full_extent(width, height);
        let v = solve_qp(&refs, &costs, &edges).unwrap();
        let expected: BoxVector = target.to_vector();
        for (got, want) in v.components().iter().zip(expected.components()) {
            assert!((got - want).abs() < 1e-9);
        }
        assert_eq!(round_to_box(&v, width, height), target);
    }
}
