use crate::error::Result;
use crate::volgrid::Mask;

/// Dice similarity of the positive voxels of two masks; 1.0 when both are empty.
pub fn dice(pred: &Mask, gt: &Mask) -> Result<f64> {
    pred.geometry()
        .ensure_same(gt.geometry(), "prediction vs ground truth")?;
    let (mut p, mut g, mut both) = (0usize, 0usize, 0usize);
    for (&a, &b) in pred.labels().iter().zip(gt.labels()) {
        let (a, b) = (a > 0, b > 0);
        p += a as usize;
        g += b as usize;
        both += (a && b) as usize;
    }
    if p + g == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * both as f64 / (p + g) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volgrid::Geometry;

    fn m(labels: Vec<u16>) -> Mask {
        Mask::new(Geometry::isotropic([labels.len(), 1, 1], 1.0).unwrap(), labels).unwrap()
    }

    #[test]
    fn examples() {
        assert_eq!(dice(&m(vec![1, 1, 0]), &m(vec![1, 1, 0])).unwrap(), 1.0);
        assert_eq!(dice(&m(vec![1, 0, 0]), &m(vec![0, 0, 2])).unwrap(), 0.0);
        assert_eq!(dice(&m(vec![1, 1, 0]), &m(vec![0, 1, 1])).unwrap(), 0.5);
        assert_eq!(dice(&m(vec![0, 0]), &m(vec![0, 0])).unwrap(), 1.0);
    }

    #[test]
    fn geometry_mismatch() {
        assert!(dice(&m(vec![0, 0]), &m(vec![0, 0, 0])).is_err());
    }
}
