//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits non-zero if any fails.

use std::path::Path;
use std::time::Instant;

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use serireg::distortion::{distort_volume, oracle_recovery, DistortionRecord, DistortionSpec};
use serireg::geometry::{compose_fields, invert_field, is_interior, warp_slice, ControlLattice, InterpolationKind, INTERIOR_MARGIN};
use serireg::harness::{generate_phantom, run_pipeline, InputSpec, MethodSpec, PhantomKind, PhantomSpec, PipelineConfig, COMPARISON_CSV};
use serireg::io::{load_field_stack, load_stack, save_field_stack, save_stack};
use serireg::metrics::{evaluate, make_mask, similarity_suite, EvalOptions, MetricsRecord};
use serireg::registration::{
    import_external, register_elastic, register_rigid, register_stack, ExternalKind, MethodKind, RegistrationMethod,
    RegistrationOptions, RegistrationResult, SliceDiagnostics, StackStrategy,
};
use serireg::{DisplacementField, FieldStack, Slice, Volume};

type Outcome = Result<String, String>;

fn test_runner(cases: u32) -> TestRunner {
    let config = Config { cases, failure_persistence: None, ..Config::default() };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok { Ok(detail) } else { Err(detail) }
}

fn result_of(fields: FieldStack, method: &str) -> RegistrationResult {
    let diagnostics = fields
        .indices()
        .iter()
        .map(|&z| SliceDiagnostics { z, similarity_final: f64::NAN, iterations: 0, converged: true })
        .collect();
    RegistrationResult { fields, diagnostics, method: method.into(), strategy: "pairwise".into() }
}

fn tube_case(seed: u64) -> (Volume, Volume, DistortionRecord) {
    let original = generate_phantom(&PhantomSpec::new(PhantomKind::BentTube, [128, 128, 64], seed)).unwrap();
    let spec = DistortionSpec { p_drop: 0.0, ..DistortionSpec::preset(seed) };
    let (distorted, record) = distort_volume(&original, &spec).unwrap();
    (original, distorted, record)
}

fn oracle_calibration() -> Outcome {
    let start = Instant::now();
    let (original, distorted, record) = tube_case(1);
    let oracle = result_of(oracle_recovery(&record, 0.01).unwrap(), "oracle");
    let m = evaluate(&oracle, &record, &original, &distorted, &EvalOptions::default()).unwrap();
    let secs = start.elapsed().as_secs_f64();
    check(
        m.aggregate.mean <= 0.02 && secs < 60.0,
        format!("oracle aggregate mean {:.5} px (<= 0.02), {secs:.1} s (< 60)", m.aggregate.mean),
    )
}

fn identity_baseline() -> Outcome {
    let (original, distorted, record) = tube_case(1);
    let v = Volume::from_slices(distorted.slices(), [1.0; 3]).unwrap().with_provenance(distorted.provenance().clone());
    let identity = register_stack(&v, &RegistrationMethod::new(MethodKind::Identity), StackStrategy::mid()).unwrap();
    let m = evaluate(&identity, &record, &original, &distorted, &EvalOptions::default()).unwrap();
    // analytic: mean |composed field| over the same interior pixels
    let (mut sum, mut n) = (0.0, 0usize);
    for z in record.surviving() {
        let f = record.composed.get(z).unwrap();
        for y in 0..f.ny() {
            for x in 0..f.nx() {
                if is_interior(x, y, f.nx(), f.ny(), INTERIOR_MARGIN) {
                    let v = f.get(x, y);
                    sum += f64::from(v[0]).hypot(f64::from(v[1]));
                    n += 1;
                }
            }
        }
    }
    let analytic = sum / n as f64;
    let rel = (m.aggregate.mean - analytic).abs() / analytic;
    check(rel <= 0.02, format!("identity mean {:.4} px vs analytic {analytic:.4} px, rel diff {rel:.2e} (<= 2%)", m.aggregate.mean))
}

fn textured_volume(nz: usize, seed: u64) -> Volume {
    let spec = PhantomSpec { cell_px: 6, noise_std: 0.02, ..PhantomSpec::new(PhantomKind::CheckerNoise, [128, 128, nz], seed) };
    generate_phantom(&spec).unwrap()
}

fn rigid_recovery() -> Outcome {
    let original = textured_volume(20, 21);
    let spec = DistortionSpec::rigid_only(33, 2f64.to_radians(), 5.0);
    let (distorted, record) = distort_volume(&original, &spec).unwrap();
    let opts = RegistrationOptions::default();
    let mut worst = (0.0f64, 0.0f64);
    let mut fields = Vec::new();
    for (k, &z) in record.surviving().iter().enumerate() {
        let est = register_rigid(&original.slice(z), &distorted.slice(k), &opts).unwrap();
        let truth = record.slices[z].rigid;
        let t = est.transform;
        worst.0 = worst.0.max((t.theta - truth.theta).abs().to_degrees());
        worst.1 = worst.1.max((t.tx - truth.tx).hypot(t.ty - truth.ty));
        fields.push(est.correction_field(128, 128));
    }
    let result = result_of(FieldStack::with_indices(record.surviving(), fields).unwrap(), "rigid");
    let m = evaluate(&result, &record, &original, &distorted, &EvalOptions::default()).unwrap();
    check(
        worst.0 <= 0.5 && worst.1 <= 0.5 && m.aggregate.mean <= 0.75,
        format!(
            "20 slices: worst angle error {:.3} deg (<= 0.5), worst shift error {:.3} px (<= 0.5), aggregate mean {:.3} px (<= 0.75)",
            worst.0, worst.1, m.aggregate.mean
        ),
    )
}

fn elastic_improvement() -> Outcome {
    let mut ratios = Vec::new();
    for seed in 0..5u64 {
        let original = textured_volume(3, 40 + seed);
        let spec = DistortionSpec::elastic_only(100 + seed, 32.0, 3.0);
        let (distorted, record) = distort_volume(&original, &spec).unwrap();
        let opts = RegistrationOptions::default();
        let fields = record
            .surviving()
            .iter()
            .enumerate()
            .map(|(k, &z)| register_elastic(&original.slice(z), &distorted.slice(k), &opts).unwrap().field)
            .collect();
        let elastic = result_of(FieldStack::with_indices(record.surviving(), fields).unwrap(), "elastic");
        let identity = result_of(FieldStack::zeros(128, 128, record.surviving()).unwrap(), "identity");
        let eo = EvalOptions::default();
        let me = evaluate(&elastic, &record, &original, &distorted, &eo).unwrap();
        let mi = evaluate(&identity, &record, &original, &distorted, &eo).unwrap();
        ratios.push(me.aggregate.mean / mi.aggregate.mean);
    }
    let worst = ratios.iter().cloned().fold(0.0, f64::max);
    check(worst <= 0.5, format!("elastic/identity mean error per seed {ratios:.3?} (each <= 0.5)"))
}

fn drift_detection() -> Outcome {
    let mut wins = 0;
    let mut oracle_max = 0.0f64;
    let mut rows = Vec::new();
    for seed in 0..5u64 {
        let phantom = PhantomSpec {
            amplitude_px: 10.0,
            period_slices: 64.0,
            ..PhantomSpec::new(PhantomKind::BentTube, [128, 128, 64], 500 + seed)
        };
        let original = generate_phantom(&phantom).unwrap();
        let spec = DistortionSpec::rigid_only(900 + seed, 1f64.to_radians(), 2.0);
        let (distorted, record) = distort_volume(&original, &spec).unwrap();
        let eo = EvalOptions::default();
        let rigid = RegistrationMethod::new(MethodKind::Rigid);
        let chain = register_stack(&distorted, &rigid, StackStrategy::ChainToPrevious).unwrap();
        let fixed = register_stack(&distorted, &rigid, StackStrategy::mid()).unwrap();
        let oracle = result_of(oracle_recovery(&record, 0.01).unwrap(), "oracle");
        let dc = evaluate(&chain, &record, &original, &distorted, &eo).unwrap().drift.score;
        let df = evaluate(&fixed, &record, &original, &distorted, &eo).unwrap().drift.score;
        let dor = evaluate(&oracle, &record, &original, &distorted, &eo).unwrap().drift.score;
        wins += usize::from(dc > df);
        oracle_max = oracle_max.max(dor);
        rows.push(format!("{dc:.2}/{df:.2}"));
    }
    check(
        wins >= 4 && oracle_max <= 0.05,
        format!("chain/fixed drift per seed [{}]: chain larger in {wins}/5 (>= 4); oracle max drift {oracle_max:.4} px (<= 0.05)", rows.join(", ")),
    )
}

fn pipeline_config(out: &Path, threads: usize) -> PipelineConfig {
    let phantom = PhantomSpec { radius_px: 8.0, amplitude_px: 6.0, period_slices: 32.0, ..PhantomSpec::new(PhantomKind::BentTube, [64, 64, 32], 3) };
    let methods = vec![
        MethodSpec::builtin(MethodKind::Identity, RegistrationOptions::default()),
        MethodSpec::builtin(MethodKind::Rigid, RegistrationOptions::default()),
        MethodSpec::builtin(MethodKind::Elastic, RegistrationOptions::default()),
        MethodSpec::oracle(),
    ];
    let mut cfg = PipelineConfig::new(InputSpec::Phantom { phantom }, DistortionSpec { sigma_t_px: 2.0, ..DistortionSpec::preset(8) }, methods, out);
    cfg.threads = Some(threads);
    cfg
}

fn tree_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().display().to_string(), std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("t1"), tmp.path().join("t8"));
    run_pipeline(&pipeline_config(&a, 1)).map_err(|e| e.to_string())?;
    run_pipeline(&pipeline_config(&b, 8)).map_err(|e| e.to_string())?;
    let (ta, tb) = (tree_bytes(&a), tree_bytes(&b));
    let names: Vec<&str> = ta.iter().map(|f| f.0.as_str()).collect();
    let differing: Vec<&str> = ta.iter().zip(&tb).filter(|(x, y)| x != y).map(|(x, _)| x.0.as_str()).collect();
    let covers = ["distorted/slice_0000.png", "distorted/ground_truth/field_0000.bin", "rigid/field_0000.bin", "rigid/metrics.json", COMPARISON_CSV]
        .iter()
        .all(|n| names.contains(n));
    check(
        ta.len() == tb.len() && differing.is_empty() && covers,
        format!("{} files compared between 1 and 8 threads, {} differ {:?}", ta.len(), differing.len(), differing),
    )
}

fn smooth_field(nx: usize, ny: usize, seed: u64, spacing: f64, amp: f64) -> DisplacementField {
    let mut lattice = ControlLattice::new(nx, ny, spacing);
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    for n in lattice.nodes_mut() {
        *n = [r.random_range(-amp..=amp), r.random_range(-amp..=amp)];
    }
    lattice.evaluate()
}

/// Interior pixels whose sample point `x + u(x)` stays inside the domain.
fn sound_pixels(u: &DisplacementField) -> impl Iterator<Item = (usize, usize)> + '_ {
    let (nx, ny) = u.dims();
    (0..ny).flat_map(move |y| (0..nx).map(move |x| (x, y))).filter(move |&(x, y)| {
        let v = u.get(x, y);
        let (px, py) = (x as f64 + f64::from(v[0]), y as f64 + f64::from(v[1]));
        is_interior(x, y, nx, ny, INTERIOR_MARGIN) && px >= 0.0 && py >= 0.0 && px <= (nx - 1) as f64 && py <= (ny - 1) as f64
    })
}

fn field_algebra() -> Outcome {
    let mut runner = test_runner(120);
    let strategy = (any::<u64>(), 12.0..32.0f64, 0.3..2.0f64, 0.01..0.1f64);
    let worst = std::cell::Cell::new([0.0f64; 2]);
    let res = runner.run(&strategy, |(seed, spacing, amp, tol)| {
        let (nx, ny) = (48, 40);
        let u = smooth_field(nx, ny, seed, spacing, amp);
        let v = smooth_field(nx, ny, seed ^ 1, spacing, amp);
        let w = smooth_field(nx, ny, seed ^ 2, spacing, amp);
        // inversion
        let inv = invert_field(&u, tol, 100).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let round = compose_fields(&inv.field, &u).unwrap();
        let r = sound_pixels(&inv.field).map(|(x, y)| { let e = round.get(x, y); f64::from(e[0]).hypot(f64::from(e[1])) }).fold(0.0, f64::max);
        prop_assert!(r <= 2.0 * tol, "invert-compose residual {r} > 2 tol ({tol})");
        // associativity
        let left = compose_fields(&compose_fields(&u, &v).unwrap(), &w).unwrap();
        let right = compose_fields(&u, &compose_fields(&v, &w).unwrap()).unwrap();
        let uv = compose_fields(&u, &v).unwrap();
        let a = sound_pixels(&u)
            .filter(|&(x, y)| sound_pixels_at(&uv, x, y))
            .map(|(x, y)| { let (l, q) = (left.get(x, y), right.get(x, y)); f64::from(l[0] - q[0]).hypot(f64::from(l[1] - q[1])) })
            .fold(0.0, f64::max);
        prop_assert!(a <= 0.05, "associativity gap {a}");
        let w = worst.get();
        worst.set([w[0].max(r / tol), w[1].max(a)]);
        // zero warp
        let img = Slice::from_fn(nx, ny, |x, y| ((x * 7 + y * 3) % 11) as f32 / 10.0);
        for k in [InterpolationKind::nearest(), InterpolationKind::bilinear(), InterpolationKind::bicubic()] {
            prop_assert_eq!(warp_slice(&img, &DisplacementField::zeros(nx, ny), k).unwrap(), img.clone());
        }
        // constant composition
        let (a0, b0) = ((seed % 97) as f32 * 0.13 - 6.0, (seed % 89) as f32 * -0.07 + 3.0);
        let c = compose_fields(&DisplacementField::constant(nx, ny, [a0, b0]), &DisplacementField::constant(nx, ny, [b0, a0])).unwrap();
        prop_assert!(c.vectors().iter().all(|e| *e == [a0 + b0, b0 + a0]));
        Ok(())
    });
    match res {
        Ok(()) => Ok(format!("120 random smooth fields: worst residual {:.2} tol (<= 2), worst associativity gap {:.4} px (<= 0.05), zero warp and constant composition exact", worst.get()[0], worst.get()[1])),
        Err(e) => Err(e.to_string()),
    }
}

fn sound_pixels_at(u: &DisplacementField, x: usize, y: usize) -> bool {
    let (nx, ny) = u.dims();
    let v = u.get(x, y);
    let (px, py) = (x as f64 + f64::from(v[0]), y as f64 + f64::from(v[1]));
    px >= 0.0 && py >= 0.0 && px <= (nx - 1) as f64 && py <= (ny - 1) as f64
}

fn metric_sanity() -> Outcome {
    let mut runner = test_runner(100);
    let strategy = (any::<u64>(), 16usize..40, 16usize..40, 0.0..0.6f64);
    let res = runner.run(&strategy, |(seed, nx, ny, threshold)| {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let a = Slice::new(nx, ny, (0..nx * ny).map(|_| r.random::<f32>()).collect()).unwrap();
        let b = Slice::new(nx, ny, (0..nx * ny).map(|_| r.random::<f32>()).collect()).unwrap();
        let mask = make_mask(&a, threshold, 0);
        let s = similarity_suite(&a, &a, &mask).unwrap();
        prop_assert_eq!(s.ssim, 1.0);
        let inv = similarity_suite(&a, &a.map(|p| 1.0 - p), &mask).unwrap();
        prop_assert!((inv.ncc + 1.0).abs() < 1e-9);
        // masked-out pixels do not matter
        let noisy = Slice::new(nx, ny, a.pixels().iter().zip(mask.bits()).map(|(&p, &m)| if m { p } else { r.random() }).collect()).unwrap();
        prop_assert_eq!(similarity_suite(&noisy, &b, &mask).unwrap(), similarity_suite(&a, &b, &mask).unwrap());
        // symmetry
        let (ab, ba) = (similarity_suite(&a, &b, &mask).unwrap(), similarity_suite(&b, &a, &mask).unwrap());
        prop_assert!((ab.mse - ba.mse).abs() <= 1e-6 && (ab.ncc - ba.ncc).abs() <= 1e-6 && (ab.ssim - ba.ssim).abs() <= 1e-6);
        Ok(())
    });
    res.map_err(|e| e.to_string())?;

    // pooled statistics over a small distorted stack, with masks of different sizes
    let mut runner = test_runner(24);
    let res = runner.run(&(any::<u64>(), 0.0..0.5f64), |(seed, threshold)| {
        let spec = PhantomSpec { count: 3, radius_min_px: 4.0, radius_max_px: 8.0, ..PhantomSpec::new(PhantomKind::Spheres, [40, 40, 24], seed) };
        let original = generate_phantom(&spec).unwrap();
        let (distorted, record) = distort_volume(&original, &DistortionSpec { p_drop: 0.1, ..DistortionSpec::preset(seed) }).unwrap();
        let identity = result_of(FieldStack::zeros(40, 40, record.surviving()).unwrap(), "identity");
        let opts = EvalOptions { mask_threshold: threshold, ..Default::default() };
        let m: MetricsRecord = evaluate(&identity, &record, &original, &distorted, &opts).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let total: usize = m.slices.iter().map(|s| s.mask_pixels).sum();
        let weighted: f64 = m.slices.iter().map(|s| s.error.mean * s.mask_pixels as f64).sum::<f64>() / total as f64;
        prop_assert!((weighted - m.aggregate.mean).abs() <= 1e-12 * m.aggregate.mean.max(1.0), "{weighted} vs {}", m.aggregate.mean);
        prop_assert_eq!(m.aggregate.count, total);
        prop_assert!(m.aggregate.median <= m.aggregate.p95 && m.aggregate.p95 <= m.aggregate.max);
        Ok(())
    });
    res.map_err(|e| e.to_string())?;
    Ok("100 random slice pairs: ssim(a,a) = 1, ncc(a,1-a) = -1, masked-pixel invariance, symmetry; pooled mean identity exact over 24 stacks".into())
}

fn round_trips() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let mut r = ChaCha8Rng::seed_from_u64(9);
    let v = Volume::new([17, 13, 3], [1.0; 3], (0..17 * 13 * 3).map(|_| r.random::<f32>()).collect()).unwrap();
    let mut worst = [0.0f64; 2];
    for (k, bits) in [8u8, 16].into_iter().enumerate() {
        let dir = tmp.path().join(format!("stack{bits}"));
        save_stack(&v, &dir, bits).unwrap();
        let back = load_stack(&dir, None).unwrap();
        worst[k] = v.voxels().iter().zip(back.voxels()).map(|(a, b)| f64::from((a - b).abs())).fold(0.0, f64::max);
    }
    let stack_ok = worst[0] <= 0.5 / 255.0 + 1e-7 && worst[1] <= 0.5 / 65535.0 + 1e-7;

    let fields: Vec<DisplacementField> = (0..3).map(|z| smooth_field(17, 13, z, 8.0, 3.0)).collect();
    let mut fs = FieldStack::new(fields).unwrap();
    fs = FieldStack::with_indices(fs.indices().to_vec(), {
        let mut f = fs.into_fields();
        f[0].vectors_mut()[0] = [-0.0, f32::MIN_POSITIVE / 2.0];
        f
    })
    .unwrap();
    save_field_stack(&fs, tmp.path().join("f")).unwrap();
    let back = load_field_stack(tmp.path().join("f")).unwrap();
    let bits_equal = fs.fields().iter().zip(back.fields()).all(|(a, b)| {
        a.vectors().iter().zip(b.vectors()).all(|(p, q)| p[0].to_bits() == q[0].to_bits() && p[1].to_bits() == q[1].to_bits())
    });

    // export a built-in result and re-import it
    let spec = PhantomSpec { radius_px: 8.0, amplitude_px: 6.0, ..PhantomSpec::new(PhantomKind::BentTube, [64, 64, 32], 4) };
    let original = generate_phantom(&spec).unwrap();
    let (distorted, record) = distort_volume(&original, &DistortionSpec::preset(4)).unwrap();
    let result = register_stack(&distorted, &RegistrationMethod::new(MethodKind::Translation), StackStrategy::mid()).unwrap();
    let eo = EvalOptions::default();
    let direct = evaluate(&result, &record, &original, &distorted, &eo).unwrap();
    let out = tmp.path().join("translation");
    result.save(&out).unwrap();
    let mut imported = import_external(&out, ExternalKind::Fields, (64, 64), &record.surviving()).unwrap();
    imported.method = result.method.clone();
    imported.strategy = result.strategy.clone();
    let again = evaluate(&imported, &record, &original, &distorted, &eo).unwrap();
    let same = serde_json::to_string(&direct).unwrap() == serde_json::to_string(&again).unwrap();
    check(
        stack_ok && bits_equal && same,
        format!(
            "stack max error 8-bit {:.2e} / 16-bit {:.2e} (within half a step), fields bit-exact: {bits_equal}, re-imported metrics identical: {same}",
            worst[0], worst[1]
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("oracle calibration", oracle_calibration),
        ("no-correction baseline", identity_baseline),
        ("rigid recovery", rigid_recovery),
        ("elastic improvement", elastic_improvement),
        ("drift/banana detection", drift_detection),
        ("determinism across thread counts", determinism),
        ("field-algebra properties", field_algebra),
        ("metric sanity properties", metric_sanity),
        ("format round trips", round_trips),
    ];
    let only: Vec<usize> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect())
        .unwrap_or_default();
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let n = k + 1;
        if !only.is_empty() && !only.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("[PRIMARY] criterion {n} ({name}): PASS - {detail} [{secs:.1} s]"),
            Err(detail) => {
                failed += 1;
                println!("[PRIMARY] criterion {n} ({name}): FAIL - {detail} [{secs:.1} s]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
