use super::{AlignConfig, AlignError, AnchorPair};
use crate::model::{TimeTransform, Track, TransformPiece};

/// Least-squares line through `pts`; `None` when x has no spread.
fn least_squares(pts: &[(f64, f64)]) -> Option<(f64, f64)> {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Fits `pts` (sorted by x) recursively; returns `(split_x, slope, offset)`
/// per piece, where `split_x` is the piece's lower boundary.
fn fit_pieces(
    pts: &[(f64, f64)],
    lower: f64,
    cfg: &AlignConfig,
    out: &mut Vec<(f64, f64, f64)>,
) -> Result<(), AlignError> {
    let (slope, offset) = least_squares(pts).ok_or(AlignError::DegenerateFit)?;
    let residuals: Vec<f64> = pts.iter().map(|&(x, y)| y - (slope * x + offset)).collect();
    let worst = residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let min_piece = cfg.min_anchors.max(2);
    if worst > cfg.max_residual_s && pts.len() >= 2 * min_piece {
        // split between the consecutive anchors whose residuals jump the most
        let split = (min_piece..=pts.len() - min_piece)
            .filter(|&k| pts[k].0 > pts[k - 1].0)
            .max_by(|&a, &b| {
                let ga = (residuals[a] - residuals[a - 1]).abs();
                let gb = (residuals[b] - residuals[b - 1]).abs();
                ga.total_cmp(&gb).then(b.cmp(&a))
            });
        if let Some(k) = split {
            let boundary = 0.5 * (pts[k - 1].0 + pts[k].0);
            fit_pieces(&pts[..k], lower, cfg, out)?;
            return fit_pieces(&pts[k..], boundary, cfg, out);
        }
    }
    if !(slope > 0.0) {
        return Err(AlignError::DegenerateFit);
    }
    out.push((lower, slope, offset));
    Ok(())
}

pub fn fit_transform(anchors: &[AnchorPair], t1: &Track, t2: &Track) -> Result<TimeTransform, AlignError> {
    fit_transform_with(anchors, t1, t2, &AlignConfig::default())
}

/// Piecewise least-squares fit of track-2 start times against track-1 start
/// times over the anchors.
pub fn fit_transform_with(
    anchors: &[AnchorPair],
    t1: &Track,
    t2: &Track,
    cfg: &AlignConfig,
) -> Result<TimeTransform, AlignError> {
    let mut pts: Vec<(f64, f64)> = anchors
        .iter()
        .filter_map(|a| Some((t1.line(a.i)?.start_s, t2.line(a.j)?.start_s)))
        .collect();
    if pts.len() < cfg.min_anchors.max(2) {
        return Err(AlignError::InsufficientAnchors {
            found: pts.len(),
            required: cfg.min_anchors.max(2),
        });
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    fit_points(&pts, cfg)
}

/// Fit over raw `(t1, t2)` time pairs sorted by `t1`.
pub(crate) fn fit_points(pts: &[(f64, f64)], cfg: &AlignConfig) -> Result<TimeTransform, AlignError> {
    let mut raw = Vec::new();
    fit_pieces(pts, 0.0f64.min(pts[0].0), cfg, &mut raw)?;
    let pieces = raw
        .iter()
        .enumerate()
        .map(|(k, &(from, slope, offset))| TransformPiece {
            valid_from_s: from,
            valid_to_s: raw.get(k + 1).map_or(f64::MAX, |next| next.0),
            slope,
            offset,
        })
        .collect();
    Ok(TimeTransform { pieces })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> AlignConfig {
        AlignConfig::default()
    }

    #[test]
    fn exact_line() {
        let pts: Vec<(f64, f64)> = (0..20).map(|k| (k as f64 * 30.0, k as f64 * 30.0 + 12.0)).collect();
        let t = fit_points(&pts, &cfg()).unwrap();
        assert_eq!(t.pieces.len(), 1);
        assert!((t.pieces[0].slope - 1.0).abs() < 1e-9);
        assert!((t.pieces[0].offset - 12.0).abs() < 1e-9);
    }

    #[test]
    fn two_regimes() {
        let pts: Vec<(f64, f64)> = (0..60)
            .map(|k| {
                let x = k as f64 * 20.0 + 5.0;
                (x, if x < 600.0 { x } else { x + 60.0 })
            })
            .collect();
        let t = fit_points(&pts, &cfg()).unwrap();
        assert_eq!(t.pieces.len(), 2);
        let bp = t.breakpoints()[0];
        assert!((bp - 600.0).abs() < 10.0, "{bp}");
        assert!((t.pieces[1].offset - 60.0).abs() < 1e-9);
    }

    #[test]
    fn too_few_for_a_split_stays_single() {
        let mut pts: Vec<(f64, f64)> = (0..7).map(|k| (k as f64 * 10.0, k as f64 * 10.0)).collect();
        pts.push((70.0, 170.0));
        let t = fit_points(&pts, &cfg()).unwrap();
        assert_eq!(t.pieces.len(), 1);
    }

    #[test]
    fn flat_x_is_degenerate() {
        let pts = vec![(5.0, 1.0); 6];
        assert!(matches!(fit_points(&pts, &cfg()), Err(AlignError::DegenerateFit)));
    }
}
