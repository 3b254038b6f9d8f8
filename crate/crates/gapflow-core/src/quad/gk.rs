//! 21-point Gauss-Kronrod panel rule and a globally adaptive driver.
//!
//! The panel rule follows the classic QUADPACK organisation: the Kronrod
//! result is the value, the embedded 10-point Gauss result drives the error
//! estimate, and `resasc` (integral of |f - mean|) is used to rescale the
//! raw error so it stays meaningful on oscillatory panels.

/// Nodes of the 21-point Kronrod rule on [-1, 1] (non-negative half).
const XGK21: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

/// Weights of the embedded 10-point Gauss rule.
const WG10: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Weights of the 21-point Kronrod rule.
const WGK21: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// QUADPACK error rescaling: damp the raw Kronrod-Gauss difference using the
/// panel's variation `resasc`, and floor at roundoff level relative to
/// `resabs`.
fn rescale_error(err: f64, resabs: f64, resasc: f64) -> f64 {
    let mut err = err.abs();
    if resasc != 0.0 && err != 0.0 {
        let scale = (200.0 * err / resasc).powf(1.5);
        err = if scale < 1.0 { resasc * scale } else { resasc };
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        let min_err = 50.0 * f64::EPSILON * resabs;
        if min_err > err {
            err = min_err;
        }
    }
    err
}

/// Result of a single Gauss-Kronrod panel.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Panel {
    pub value: f64,
    pub abserr: f64,
}

pub(crate) fn qk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let center = 0.5 * (a + b);
    let half_len = 0.5 * (b - a);
    let abs_half_len = half_len.abs();

    let f_center = f(center);
    let mut fv1 = [0.0f64; 10];
    let mut fv2 = [0.0f64; 10];

    let mut res_gauss = 0.0;
    let mut res_kronrod = f_center * WGK21[10];
    let mut res_abs = res_kronrod.abs();

    // odd Kronrod indices coincide with the Gauss nodes
    for (j, wg) in WG10.iter().enumerate() {
        let jtw = j * 2 + 1;
        let abscissa = half_len * XGK21[jtw];
        let fval1 = f(center - abscissa);
        let fval2 = f(center + abscissa);
        fv1[jtw] = fval1;
        fv2[jtw] = fval2;
        let fsum = fval1 + fval2;
        res_gauss += wg * fsum;
        res_kronrod += WGK21[jtw] * fsum;
        res_abs += WGK21[jtw] * (fval1.abs() + fval2.abs());
    }
    for j in 0..5 {
        let jtw = j * 2;
        let abscissa = half_len * XGK21[jtw];
        let fval1 = f(center - abscissa);
        let fval2 = f(center + abscissa);
        fv1[jtw] = fval1;
        fv2[jtw] = fval2;
        res_kronrod += WGK21[jtw] * (fval1 + fval2);
        res_abs += WGK21[jtw] * (fval1.abs() + fval2.abs());
    }

    let mean = res_kronrod * 0.5;
    let mut res_asc = WGK21[10] * (f_center - mean).abs();
    for j in 0..10 {
        res_asc += WGK21[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }

    let err = (res_kronrod - res_gauss) * half_len;
    Panel {
        value: res_kronrod * half_len,
        abserr: rescale_error(err, res_abs * abs_half_len, res_asc * abs_half_len),
    }
}

/// Outcome of an adaptive integration: always carries the best estimate so
/// non-convergence can be reported without losing the partial answer.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Adaptive {
    pub value: f64,
    pub abserr: f64,
    pub subdivisions: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    abserr: f64,
}

/// Globally adaptive Gauss-Kronrod integration on a finite interval:
/// repeatedly bisect the segment with the largest error estimate until
/// `sum(err) <= max(abs_tol, rel_tol * |sum(value)|)` or the budget runs out.
///
/// `seeds` optionally pre-partitions [a, b]; this is how oscillatory
/// integrands get one panel per kernel half-period before refinement starts.
pub(crate) fn adaptive<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    seeds: Option<&[f64]>,
    rel_tol: f64,
    abs_tol: f64,
    max_subdivisions: usize,
) -> Adaptive {
    let mut segs: Vec<Segment> = Vec::with_capacity(32);
    let push = |segs: &mut Vec<Segment>, lo: f64, hi: f64| {
        let p = qk21(f, lo, hi);
        segs.push(Segment {
            a: lo,
            b: hi,
            value: p.value,
            abserr: p.abserr,
        });
    };

    match seeds {
        Some(pts) if pts.len() >= 2 => {
            for w in pts.windows(2) {
                push(&mut segs, w[0], w[1]);
            }
        }
        _ => push(&mut segs, a, b),
    }

    let mut subdivisions = segs.len();
    loop {
        let total: f64 = segs.iter().map(|s| s.value).sum();
        let err: f64 = segs.iter().map(|s| s.abserr).sum();
        let tol = abs_tol.max(rel_tol * total.abs());
        if err <= tol {
            return Adaptive {
                value: total,
                abserr: err,
                subdivisions,
                converged: true,
            };
        }
        if subdivisions >= max_subdivisions {
            return Adaptive {
                value: total,
                abserr: err,
                subdivisions,
                converged: false,
            };
        }
        // bisect the worst segment
        let (idx, _) = segs
            .iter()
            .enumerate()
            .max_by(|(_, x), (_, y)| x.abserr.total_cmp(&y.abserr))
            .expect("segment list is never empty");
        let worst = segs.swap_remove(idx);
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval no longer splittable at f64 resolution; keep it and
            // accept its error contribution as irreducible
            let mut out = Adaptive {
                value: 0.0,
                abserr: 0.0,
                subdivisions,
                converged: false,
            };
            segs.push(worst);
            out.value = segs.iter().map(|s| s.value).sum();
            out.abserr = segs.iter().map(|s| s.abserr).sum();
            return out;
        }
        push(&mut segs, worst.a, mid);
        push(&mut segs, mid, worst.b);
        subdivisions += 1;
    }
}
