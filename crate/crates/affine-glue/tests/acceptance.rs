//! End-to-end acceptance checks: one test per criterion, each printing a
//! single pass/fail line in the harness output.

use std::process::Command;
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use affine_glue::embedder::{affinize, BuildOptions, EmbedError, EmbeddedSpace};
use affine_glue::fixtures;
use affine_glue::germ::germ_table;
use affine_glue::io::{
    document_to_instance, embedding_to_document, embedding_to_instance, parse_embedding,
    render_embedding, render_instance, Instance,
};
use affine_glue::kernel::{
    pl_intersections, solve_first_crossing, End, IntersectionRecord, PLFunction, PLPath,
};
use affine_glue::neighborhood::shadow_set;
use affine_glue::oracle::{
    bisection_crossing_tol, brute_force_shadows, verify_bijection, verify_homeomorphism,
};
use affine_glue::scalar::{Point, Scalar};
use affine_glue::space::{
    validate, Arc, EndSpec, PointEntry, SpaceDescription, TauTarget,
};
use affine_glue::unbounded::{affinize_unbounded, verify_properness};
use affine_glue::verifier::{check_criterion, discontinuity_locus, image_limit_at_end};

fn accepted_fixtures() -> Vec<SpaceDescription> {
    vec![
        fixtures::circle(),
        fixtures::figure_eight(),
        fixtures::no_limit(),
        fixtures::collision(),
        fixtures::empty_g(),
    ]
}

/// A random instance from an always-accepted family: horizontal arcs on
/// distinct levels whose open ends are re-glued to marked base points or
/// left limitless.
fn fuzz_space(rng: &mut ChaCha8Rng) -> SpaceDescription {
    let arcs_n = rng.gen_range(1..=3usize);
    let mut points = Vec::new();
    let mut arcs = Vec::new();
    for j in 0..arcs_n {
        let y = Scalar::from_int(2 + 3 * j as i64);
        let denom = rng.gen_range(1..=3i64);
        let x0 = Scalar::ratio(rng.gen_range(2..=9i64), denom);
        let len = Scalar::from_int(rng.gen_range(2..=4i64));
        let base = Point(vec![x0.clone(), y.clone()]);
        let tip = Point(vec![&x0 + &len, y.clone()]);
        points.push(PointEntry {
            id: format!("m{j}"),
            coords: base.clone(),
            in_x: true,
            in_g: true,
        });
        points.push(PointEntry {
            id: format!("e{j}"),
            coords: tip.clone(),
            in_x: false,
            in_g: false,
        });
        let tau = if rng.gen_bool(0.25) {
            TauTarget::NoLimit
        } else {
            let target = rng.gen_range(0..=j);
            TauTarget::Glue(format!("m{target}"))
        };
        arcs.push(Arc {
            id: format!("a{j}"),
            path: PLPath::from_vertices(vec![base, tip], false, true).unwrap(),
            ends: [
                EndSpec {
                    limit: format!("m{j}"),
                    member: true,
                    tau: TauTarget::Affine,
                },
                EndSpec {
                    limit: format!("e{j}"),
                    member: false,
                    tau,
                },
            ],
        });
    }
    SpaceDescription {
        n: 2,
        r: None,
        points,
        arcs,
        declared_k: None,
        shift: None,
    }
}

fn slot_offset(emb: &EmbeddedSpace, class: usize, slot: usize) -> usize {
    emb.n + emb.n * ((class - 1) * emb.k + (slot - 1))
}

fn lift(p: &Point, ambient: usize) -> Point {
    let mut c = p.coords().to_vec();
    c.resize(ambient, Scalar::zero());
    Point(c)
}

fn assemble(base: &Point, offset: usize, val: &Point, ambient: usize) -> Point {
    let mut c = base.coords().to_vec();
    c.resize(offset, Scalar::zero());
    c.extend(val.coords().iter().cloned());
    c.resize(ambient, Scalar::zero());
    Point(c)
}

/// Independent re-scan of all block pairs: every intersection must lie in
/// the designed junction set. Returns the offending points.
fn junction_scan(emb: &EmbeddedSpace) -> Vec<Point> {
    let ambient = emb.ambient;
    let mut allowed: Vec<Point> = emb
        .space
        .points
        .iter()
        .map(|p| lift(&p.coords, ambient))
        .collect();
    for rec in &emb.germs {
        match (&rec.target_id, &rec.q) {
            (Some(target), Some(q)) => {
                let zeta = &emb.space.point(target).unwrap().coords;
                let offset = slot_offset(emb, rec.class, rec.slot);
                allowed.push(lift(zeta, ambient));
                allowed.push(lift(q, ambient));
                allowed.push(assemble(zeta, offset, q, ambient));
                allowed.push(assemble(q, offset, q, ambient));
            }
            _ => {}
        }
    }
    for b in &emb.blocks {
        if b.name.starts_with("nolimit:") {
            allowed.push(b.path.vertices().first().unwrap().clone());
        }
    }
    let mut bad = Vec::new();
    for (ai, a) in emb.blocks.iter().enumerate() {
        for b in &emb.blocks[ai + 1..] {
            for rec in pl_intersections(&a.path, &b.path).unwrap() {
                match rec {
                    IntersectionRecord::Point(p) => {
                        if !allowed.contains(&p) {
                            bad.push(p);
                        }
                    }
                    IntersectionRecord::Overlap(p, q) => {
                        bad.push(p);
                        bad.push(q);
                    }
                }
            }
        }
    }
    bad
}

/// Closure points of the image that lie on no block: the frontier of `Y`.
fn frontier_points(emb: &EmbeddedSpace) -> Vec<Point> {
    let mut out: Vec<Point> = Vec::new();
    for b in &emb.blocks {
        for p in [
            b.path.vertices().first().unwrap(),
            b.path.vertices().last().unwrap(),
        ] {
            let contained = emb.blocks.iter().any(|c| match c.path.inverse(p) {
                Ok(t) => {
                    !(c.path.left_open && &t == c.path.param_lo())
                        && !(c.path.right_open && &t == c.path.param_hi())
                }
                Err(_) => false,
            });
            if !contained && !out.contains(p) {
                out.push(p.clone());
            }
        }
    }
    out.sort();
    out
}

#[test]
fn criterion_01_dimension_law() {
    let start = Instant::now();
    let opts = BuildOptions::default();
    for sp in accepted_fixtures() {
        let emb = affinize(&sp, &opts).unwrap();
        assert_eq!(emb.ambient, emb.n * (1 + emb.k * emb.n_classes));
        if emb.repairs.is_empty() {
            let table = germ_table(&emb.space).unwrap();
            assert_eq!(emb.k, table.k, "K' must equal K without collisions");
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..200 {
        let sp = fuzz_space(&mut rng);
        let emb = affinize(&sp, &opts)
            .unwrap_or_else(|e| panic!("fuzz case {case} failed: {e}"));
        assert_eq!(
            emb.ambient,
            emb.n * (1 + emb.k * emb.n_classes),
            "fuzz case {case}"
        );
        if emb.repairs.is_empty() {
            let table = germ_table(&emb.space).unwrap();
            assert_eq!(emb.k, table.k, "fuzz case {case}");
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "took {elapsed:?}");
}

#[test]
fn criterion_02_circle_end_to_end() {
    let emb = affinize(&fixtures::circle(), &BuildOptions::default()).unwrap();
    assert_eq!((emb.n, emb.k, emb.n_classes), (2, 1, 1));
    assert_eq!(emb.ambient, 4, "Y must sit in Q^4");
    // the image is a closed PL loop: no frontier, every junction doubled
    assert_eq!(frontier_points(&emb), Vec::<Point>::new());
    let start = Instant::now();
    let violations = verify_homeomorphism(&emb, 12);
    assert!(violations.is_empty(), "{violations:?}");
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "verification took {elapsed:?}");
}

#[test]
fn criterion_03_crossing_solver_vs_bisection() {
    // the pinned worked instance: 30t against 10 + 3t on (0, 1)
    let g = PLFunction::new(
        vec![Scalar::zero(), Scalar::one()],
        vec![Scalar::zero(), Scalar::from_int(30)],
    )
    .unwrap();
    let h = PLFunction::new(
        vec![Scalar::zero(), Scalar::one()],
        vec![Scalar::from_int(10), Scalar::from_int(13)],
    )
    .unwrap();
    let exact = solve_first_crossing(&g, &h, &Scalar::one()).unwrap();
    assert_eq!(exact, Scalar::ratio(10, 27));

    let tol = Scalar::pow2_neg(40);
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for case in 0..100 {
        // strictly increasing g against strictly decreasing h: one crossing
        let mid = Scalar::ratio(rng.gen_range(1..=7i64), 8);
        let g_mid = Scalar::ratio(rng.gen_range(1..=40i64), rng.gen_range(1..=4i64));
        let g_top = &g_mid + &Scalar::ratio(rng.gen_range(1..=40i64), 3);
        let g = PLFunction::new(
            vec![Scalar::zero(), mid.clone(), Scalar::one()],
            vec![Scalar::zero(), g_mid, g_top.clone()],
        )
        .unwrap();
        // keep h's floor below g's ceiling so the crossing exists on (0, 1)
        let h_lo = Scalar::ratio(rng.gen_range(1..=5i64), 10);
        let h_hi = &h_lo + &Scalar::ratio(rng.gen_range(1..=20i64), 2);
        let h = PLFunction::new(
            vec![Scalar::zero(), Scalar::one()],
            vec![h_hi, h_lo.clone()],
        )
        .unwrap();
        assert!(g_top > h_lo);
        let exact = solve_first_crossing(&g, &h, &Scalar::one())
            .unwrap_or_else(|e| panic!("case {case}: {e}"));
        let approx = bisection_crossing_tol(&g, &h, &Scalar::one(), &tol)
            .unwrap_or_else(|e| panic!("case {case}: {e}"));
        assert!(
            (&exact - &approx).abs() <= tol,
            "case {case}: exact {exact}, bisection {approx}"
        );
    }
}

#[test]
fn criterion_04_glued_germ_limits_are_exact() {
    let opts = BuildOptions::default();
    for sp in accepted_fixtures() {
        let emb = affinize(&sp, &opts).unwrap();
        for arc in &emb.space.arcs {
            for (idx, end) in arc.ends.iter().enumerate() {
                let TauTarget::Glue(target) = &end.tau else {
                    continue;
                };
                let side = if idx == 0 { End::Low } else { End::High };
                let zeta = &emb.space.point(target).unwrap().coords;
                let f_zeta = emb.map.eval(zeta).unwrap();
                let limit = image_limit_at_end(&emb.map, arc, side)
                    .unwrap_or_else(|| panic!("no image limit on {}", arc.id));
                assert_eq!(limit, f_zeta, "arc {} end {idx}", arc.id);
            }
        }
    }
}

#[test]
fn criterion_05_shadows_match_brute_force() {
    let start_radius = Scalar::ratio(1, 2);
    for sp in accepted_fixtures() {
        let z_coords: Vec<Point> = sp
            .points
            .iter()
            .filter(|p| p.in_g || !p.in_x)
            .map(|p| p.coords.clone())
            .collect();
        for p in &sp.points {
            if !p.in_x {
                continue;
            }
            let direct = shadow_set(&sp, &p.id).unwrap();
            let brute = brute_force_shadows(&sp, &p.id, &start_radius, 12).unwrap();
            assert_eq!(direct, brute, "point {} of a fixture", p.id);
            if p.in_g {
                for s in &direct {
                    assert!(
                        z_coords.contains(s),
                        "shadow {s:?} of {} escapes Z",
                        p.id
                    );
                }
            }
        }
    }
}

#[test]
fn criterion_06_blocks_meet_only_at_designed_junctions() {
    let opts = BuildOptions::default();
    for sp in accepted_fixtures() {
        let emb = affinize(&sp, &opts).unwrap();
        assert_eq!(junction_scan(&emb), Vec::<Point>::new());
    }
    let emb = affinize(&fixtures::collision(), &opts).unwrap();
    assert_eq!(emb.repairs.len(), 1, "{:?}", emb.repairs);
    let doc = embedding_to_document(&emb);
    assert_eq!(doc.certificate.repairs.len(), 1);

    let mut rng = ChaCha8Rng::seed_from_u64(37);
    for case in 0..200 {
        let sp = fuzz_space(&mut rng);
        let emb = affinize(&sp, &opts).unwrap();
        assert_eq!(
            junction_scan(&emb),
            Vec::<Point>::new(),
            "fuzz case {case}"
        );
        if case % 4 == 0 {
            let violations = verify_homeomorphism(&emb, 12);
            assert!(violations.is_empty(), "fuzz case {case}: {violations:?}");
        }
    }
}

fn run_cli(args: &[&str], stdin_file: Option<&str>) -> (i32, String, String) {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_affine-glue"));
    cmd.args(args);
    if let Some(f) = stdin_file {
        cmd.stdin(std::fs::File::open(f).unwrap());
    }
    let out = cmd.output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn criterion_07_rejections_carry_witnesses() {
    let dir = std::env::temp_dir();
    let non_g = dir.join("acceptance-glue-to-non-g.json");
    std::fs::write(
        &non_g,
        render_instance(&Instance::Bounded(fixtures::glue_to_non_g())),
    )
    .unwrap();
    let (code, stdout, _) = run_cli(&["check", non_g.to_str().unwrap()], None);
    assert_eq!(code, 1);
    assert!(
        stdout.contains("glue target g is not marked singular"),
        "{stdout}"
    );

    let exceeded = dir.join("acceptance-declared-k.json");
    std::fs::write(
        &exceeded,
        render_instance(&Instance::Bounded(fixtures::declared_k_exceeded())),
    )
    .unwrap();
    let (code, stdout, _) = run_cli(&["check", exceeded.to_str().unwrap()], None);
    assert_eq!(code, 1);
    assert!(
        stdout.contains("rejected g [declared-k-exceeded]"),
        "{stdout}"
    );
}

#[test]
fn criterion_08_empty_g_realizes_as_identity() {
    let sp = fixtures::empty_g();
    let emb = affinize(&sp, &BuildOptions::default()).unwrap();
    assert_eq!(emb.ambient, sp.n);
    for x in [1i64, 3, 5, 9] {
        let p = Point::from_ints(&[x]);
        assert_eq!(emb.map.eval(&p).unwrap(), p);
    }
    assert!(discontinuity_locus(&emb.space, &emb.map).is_empty());

    // the embedding document re-ingests as a plain affine instance
    let doc = embedding_to_document(&emb);
    let rendered = render_embedding(&doc);
    let parsed = parse_embedding(&rendered).unwrap();
    assert_eq!(render_embedding(&parsed), rendered, "bit-exact round trip");
    let inst_doc = embedding_to_instance(&parsed).unwrap();
    let (inst, _) = document_to_instance(&inst_doc).unwrap();
    assert!(validate(inst.core()).ok());
    let report = check_criterion(inst.core()).unwrap();
    assert!(report.accepted);
    assert_eq!(report.k, 0);
}

#[test]
fn criterion_09_no_limit_frontier_is_one_point_at_height_u() {
    let emb = affinize(&fixtures::no_limit(), &BuildOptions::default()).unwrap();
    let frontier = frontier_points(&emb);
    // one limitless end: one frontier point, at slot height exactly u over
    // the trimmed endpoint
    let p = &Scalar::from_int(9) - &emb.u;
    assert_eq!(frontier, vec![Point(vec![p, emb.u.clone()])]);
}

#[test]
fn criterion_10_unbounded_fixtures_are_proper() {
    let opts = BuildOptions::default();
    for ext in [fixtures::two_rays(), fixtures::circle_with_rays()] {
        let emb = affinize_unbounded(&ext, &opts).unwrap();
        assert_eq!(emb.ambient, emb.core.ambient + 1);
        let violations = verify_homeomorphism(&emb.core, 12);
        assert!(violations.is_empty(), "{violations:?}");
        let proper = verify_properness(&emb, &[10, 100, 1000]);
        assert!(proper.is_empty(), "{proper:?}");
        // junction continuity: each attached ray anchors at the image of
        // its junction point, and climbs linearly from height zero
        for ray in &ext.rays {
            let Some(attach) = &ray.attach else { continue };
            let junction = &ext.core.point(attach).unwrap().coords;
            let f_j = emb.core.map.eval(junction).unwrap();
            let anchor = &emb
                .anchors
                .iter()
                .find(|(id, _)| id == &ray.id)
                .unwrap()
                .1;
            assert_eq!(anchor, &f_j);
            let t = Scalar::ratio(1, 8);
            let x = ray.geom.eval(&t).unwrap();
            let y = emb.map.eval(&x).unwrap();
            let mut expected = anchor.coords().to_vec();
            expected.push(t);
            assert_eq!(y, Point(expected));
        }
    }
}

#[test]
fn criterion_11_fault_injection_is_detected() {
    let base = BuildOptions::default();
    let circle = fixtures::circle();

    let emb = affinize(
        &circle,
        &BuildOptions {
            substitute_q: false,
            ..base.clone()
        },
    )
    .unwrap();
    assert!(
        !verify_homeomorphism(&emb, 12).is_empty(),
        "held-endpoint fault went unnoticed"
    );

    let emb = affinize(
        &circle,
        &BuildOptions {
            rescale: false,
            ..base.clone()
        },
    )
    .unwrap();
    assert!(
        !discontinuity_locus(&emb.space, &emb.map).is_empty(),
        "missing rescale fault went unnoticed"
    );

    let drift = affinize(
        &circle,
        &BuildOptions {
            corrected_tail: false,
            ..base.clone()
        },
    );
    assert!(matches!(drift, Err(EmbedError::DimensionDrift { .. })));

    let emb = affinize(
        &fixtures::collision(),
        &BuildOptions {
            repair: false,
            ..base.clone()
        },
    )
    .unwrap();
    assert!(
        !junction_scan(&emb).is_empty(),
        "disabled repair left no detectable collision"
    );

    let emb = affinize(
        &circle,
        &BuildOptions {
            unit_speed: false,
            ..base
        },
    )
    .unwrap();
    let violations = verify_homeomorphism(&emb, 12);
    assert!(
        violations.iter().any(|v| v.code == "off-block"),
        "{violations:?}"
    );
    // sanity: the corrected build has none of these failures
    let good = affinize(&circle, &BuildOptions::default()).unwrap();
    assert!(verify_bijection(&good, 12).is_empty());
}
