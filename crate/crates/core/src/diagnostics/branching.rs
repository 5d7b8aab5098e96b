use nalgebra::{Matrix2, Matrix3, Vector3};
use serde::Serialize;

use crate::mesh::Mesh;

/// A run of cracked nodes inside one vertical slice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SliceCluster {
    pub x: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub y_center: f64,
}

/// Cuts `[x0, x1)` into slices of width `bin` and groups the `d >= level` nodes of each
/// slice into clusters separated by vertical gaps larger than `gap`.
pub fn slice_clusters(
    mesh: &Mesh,
    d: &[f64],
    level: f64,
    x0: f64,
    x1: f64,
    bin: f64,
    gap: f64,
) -> Vec<Vec<SliceCluster>> {
    let nbins = ((x1 - x0) / bin).ceil().max(0.0) as usize;
    let mut ys: Vec<Vec<f64>> = vec![Vec::new(); nbins];
    for (a, p) in mesh.nodes.iter().enumerate() {
        if d[a] >= level && p[0] >= x0 && p[0] < x1 {
            let k = ((p[0] - x0) / bin) as usize;
            if k < nbins {
                ys[k].push(p[1]);
            }
        }
    }
    ys.into_iter()
        .enumerate()
        .map(|(k, mut col)| {
            col.sort_by(f64::total_cmp);
            let x = x0 + (k as f64 + 0.5) * bin;
            let mut out: Vec<SliceCluster> = Vec::new();
            let mut start = 0;
            for i in 1..=col.len() {
                if i == col.len() || col[i] - col[i - 1] > gap {
                    if i > start {
                        let (lo, hi) = (col[start], col[i - 1]);
                        out.push(SliceCluster {
                            x,
                            y_min: lo,
                            y_max: hi,
                            y_center: 0.5 * (lo + hi),
                        });
                    }
                    start = i;
                }
            }
            out
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchReport {
    /// Apex of the fork: where the straight-line fits to the two arms meet. The arms
    /// only show up as separate clusters some way past the apex, further for wider
    /// damage bands. Falls back to the first separated slice when the fits are parallel
    /// or meet outside `[x0, separation]`.
    pub branch_x: Option<f64>,
    /// Angles (degrees, from the horizontal) of straight-line fits to the outermost
    /// cluster centres past the branch point.
    pub upper_angle_deg: Option<f64>,
    pub lower_angle_deg: Option<f64>,
    /// Number of clusters per slice.
    pub profile: Vec<usize>,
}

/// Locates branching of a crack running in `+x` and measures the branch angles over
/// `fit_length` past the branch point. A branch point needs `persist` consecutive
/// slices with at least two clusters.
#[allow(clippy::too_many_arguments)]
pub fn analyze_branching(
    mesh: &Mesh,
    d: &[f64],
    level: f64,
    x0: f64,
    x1: f64,
    bin: f64,
    gap: f64,
    persist: usize,
    fit_length: f64,
) -> BranchReport {
    let slices = slice_clusters(mesh, d, level, x0, x1, bin, gap);
    let profile: Vec<usize> = slices.iter().map(Vec::len).collect();
    let persist = persist.max(1);
    let start = (0..profile.len().saturating_sub(persist - 1))
        .find(|&k| profile[k..k + persist].iter().all(|&c| c >= 2));
    let Some(k0) = start else {
        return BranchReport {
            branch_x: None,
            upper_angle_deg: None,
            lower_angle_deg: None,
            profile,
        };
    };
    let xs = slices[k0][0].x;
    let mut upper = Vec::new();
    let mut lower = Vec::new();
    for col in &slices[k0..] {
        if col.len() < 2 || col[0].x > xs + fit_length {
            continue;
        }
        let top = col.iter().max_by(|a, b| a.y_center.total_cmp(&b.y_center)).unwrap();
        let bot = col.iter().min_by(|a, b| a.y_center.total_cmp(&b.y_center)).unwrap();
        upper.push((top.x, top.y_center));
        lower.push((bot.x, bot.y_center));
    }
    let (up, lo) = (fit_line(&upper), fit_line(&lower));
    let apex = match (up, lo) {
        (Some((su, yu)), Some((sl, yl))) if su - sl > 1e-3 => {
            let x = (yl - yu) / (su - sl);
            (x >= x0 && x <= xs).then_some(x)
        }
        _ => None,
    };
    BranchReport {
        branch_x: Some(apex.unwrap_or(xs)),
        upper_angle_deg: up.map(|(s, _)| s.atan().to_degrees()),
        lower_angle_deg: lo.map(|(s, _)| (-s).atan().to_degrees()),
        profile,
    }
}

/// Least-squares line `y = slope * x + intercept` as `(slope, intercept)`.
fn fit_line(pts: &[(f64, f64)]) -> Option<(f64, f64)> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| {
        let s = sxy / sxx;
        (s, my - s * mx)
    })
}

/// Angle (degrees in `[0, 90]`, from the horizontal) of the principal axis of the
/// `d >= level` nodes in the annulus `r_in <= |x - center| <= r_out`.
pub fn crack_direction_angle(
    mesh: &Mesh,
    d: &[f64],
    level: f64,
    center: [f64; 2],
    r_in: f64,
    r_out: f64,
) -> Option<f64> {
    let pts: Vec<[f64; 2]> = mesh
        .nodes
        .iter()
        .zip(d)
        .filter(|(p, &v)| {
            let r = (p[0] - center[0]).hypot(p[1] - center[1]);
            v >= level && r >= r_in && r <= r_out
        })
        .map(|(p, _)| *p)
        .collect();
    if pts.len() < 3 {
        return None;
    }
    // axis through the notch tip: second moments about the centre
    let mut c = Matrix2::<f64>::zeros();
    for p in &pts {
        let (x, y) = (p[0] - center[0], p[1] - center[1]);
        c[(0, 0)] += x * x;
        c[(0, 1)] += x * y;
        c[(1, 1)] += y * y;
    }
    c[(1, 0)] = c[(0, 1)];
    let eig = c.symmetric_eigen();
    let k = eig.eigenvalues.imax();
    let v = eig.eigenvectors.column(k);
    Some(v[1].abs().atan2(v[0].abs()).to_degrees())
}

/// Dominant period of `y` about a quadratic trend: the lag of the highest point of the
/// first positive lobe of the autocorrelation, after its first negative excursion.
/// Samples are resampled to a uniform grid first. Sample-to-sample noise only feeds the
/// zero lag, which a crossing count would not survive.
pub fn oscillation_period(t: &[f64], y: &[f64]) -> Option<f64> {
    if t.len() != y.len() || t.len() < 8 {
        return None;
    }
    let t0 = t[0];
    let span = t[t.len() - 1] - t0;
    if !(span > 0.0) {
        return None;
    }
    let n = t.len().max(256);
    let step = span / (n - 1) as f64;
    let mut j = 0;
    let uniform: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let tk = t0 + k as f64 * step;
            while j + 2 < t.len() && t[j + 1] < tk {
                j += 1;
            }
            let w = t[j + 1] - t[j];
            let f = if w > 0.0 { ((tk - t[j]) / w).clamp(0.0, 1.0) } else { 1.0 };
            ((tk - t0) / span, y[j] + f * (y[j + 1] - y[j]))
        })
        .collect();
    let mut a = Matrix3::zeros();
    let mut b = Vector3::zeros();
    for &(s, yi) in &uniform {
        let row = Vector3::new(1.0, s, s * s);
        a += row * row.transpose();
        b += row * yi;
    }
    let coef = a.lu().solve(&b)?;
    let resid: Vec<f64> = uniform
        .iter()
        .map(|&(s, yi)| yi - (coef[0] + coef[1] * s + coef[2] * s * s))
        .collect();
    let acf: Vec<f64> = (0..n / 2)
        .map(|lag| resid[..n - lag].iter().zip(&resid[lag..]).map(|(p, q)| p * q).sum())
        .collect();
    let neg = acf.iter().position(|&c| c < 0.0)?;
    let pos = neg + acf[neg..].iter().position(|&c| c > 0.0)?;
    let end = acf[pos..].iter().position(|&c| c < 0.0).map_or(acf.len(), |k| pos + k);
    let peak = (pos..end).max_by(|&p, &q| acf[p].total_cmp(&acf[q]))?;
    Some(peak as f64 * step)
}
