//! Separable Gaussian smoothing on small 3D grids.

/// Normalized 1D Gaussian kernel truncated at 3 sigma (in voxels).
/// A non-positive sigma yields the identity kernel `[1.0]`.
pub fn gaussian_kernel(sigma_vox: f64) -> Vec<f64> {
    if !(sigma_vox > 0.0) {
        return vec![1.0];
    }
    let radius = (3.0 * sigma_vox).ceil() as i64;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| {
            let x = i as f64;
            if x.abs() > 3.0 * sigma_vox {
                0.0
            } else {
                (-0.5 * (x / sigma_vox).powi(2)).exp()
            }
        })
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

/// Kernel half-width in voxels for a given sigma.
pub fn kernel_radius(sigma_vox: f64) -> usize {
    (gaussian_kernel(sigma_vox).len() - 1) / 2
}

/// In-place separable Gaussian blur of an x-fastest grid. Values outside the
/// grid are treated as zero; `sigma_vox[a]` is the sigma along axis `a`.
pub fn gaussian_blur_3d(data: &mut [f64], dims: [usize; 3], sigma_vox: [f64; 3]) {
    debug_assert_eq!(data.len(), dims[0] * dims[1] * dims[2]);
    let strides = [1, dims[0], dims[0] * dims[1]];
    let mut line = Vec::new();
    for axis in 0..3 {
        let kernel = gaussian_kernel(sigma_vox[axis]);
        if kernel.len() == 1 {
            continue;
        }
        let r = (kernel.len() / 2) as i64;
        let n = dims[axis];
        let stride = strides[axis];
        let (o1, o2) = match axis {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        for b in 0..dims[o2] {
            for a in 0..dims[o1] {
                let base = a * strides[o1] + b * strides[o2];
                line.clear();
                line.extend((0..n).map(|i| data[base + i * stride]));
                for i in 0..n as i64 {
                    let mut acc = 0.0;
                    let lo = (i - r).max(0);
                    let hi = (i + r).min(n as i64 - 1);
                    for j in lo..=hi {
                        acc += kernel[(j - i + r) as usize] * line[j as usize];
                    }
                    data[base + i as usize * stride] = acc;
                }
            }
        }
    }
}
