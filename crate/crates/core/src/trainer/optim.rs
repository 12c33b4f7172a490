use crate::compnet::OptimizerSnapshot;
use crate::Scalar;

/// RMSprop with the epsilon added outside the square root.
#[derive(Debug, Clone, PartialEq)]
pub struct RmsProp<S> {
    pub lr: f64,
    pub alpha: f64,
    pub eps: f64,
    pub square_avg: Vec<S>,
    pub updates: u64,
}

impl<S: Scalar> RmsProp<S> {
    pub fn new(len: usize, lr: f64, alpha: f64, eps: f64) -> Self {
        Self { lr, alpha, eps, square_avg: vec![S::zero(); len], updates: 0 }
    }

    /// Applies one step; entries with `frozen[i]` keep both value and statistics.
    pub fn step(&mut self, params: &mut [S], grads: &[S], frozen: Option<&[bool]>) {
        assert_eq!(params.len(), grads.len());
        assert_eq!(params.len(), self.square_avg.len());
        let (lr, a, eps) = (S::of(self.lr), S::of(self.alpha), S::of(self.eps));
        let one_minus = S::one() - a;
        for i in 0..params.len() {
            if frozen.is_some_and(|f| f[i]) {
                continue;
            }
            let g = grads[i];
            let v = a * self.square_avg[i] + one_minus * g * g;
            self.square_avg[i] = v;
            params[i] = params[i] - lr * g / (v.sqrt() + eps);
        }
        self.updates += 1;
    }

    pub fn snapshot(&self) -> OptimizerSnapshot<S> {
        OptimizerSnapshot { square_avg: self.square_avg.clone(), updates: self.updates }
    }

    pub fn restore(&mut self, s: OptimizerSnapshot<S>) {
        assert_eq!(s.square_avg.len(), self.square_avg.len());
        self.square_avg = s.square_avg;
        self.updates = s.updates;
    }
}

/// Euclidean norm of `g` in `f64`.
pub fn grad_norm<S: Scalar>(g: &[S]) -> f64 {
    g.iter().map(|v| v.to_f64().unwrap_or(f64::NAN).powi(2)).sum::<f64>().sqrt()
}

/// Rescales `g` so that its norm is at most `max_norm`; returns the norm before clipping.
pub fn clip_grad_norm<S: Scalar>(g: &mut [S], max_norm: f64) -> f64 {
    let norm = grad_norm(g);
    if max_norm > 0.0 && norm > max_norm {
        let k = S::of(max_norm / (norm + 1e-6));
        g.iter_mut().for_each(|v| *v = *v * k);
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_lr_over_root_one_minus_alpha() {
        let mut opt = RmsProp::<f64>::new(2, 0.01, 0.99, 1e-5);
        let mut p = vec![1.0, 1.0];
        opt.step(&mut p, &[2.0, 0.0], None);
        let expect = 1.0 - 0.01 * 2.0 / ((0.01f64 * 4.0).sqrt() + 1e-5);
        assert!((p[0] - expect).abs() < 1e-12);
        assert_eq!(p[1], 1.0);
    }

    #[test]
    fn zero_rate_is_identity_and_frozen_is_untouched() {
        let mut opt = RmsProp::<f32>::new(3, 0.0, 0.99, 1e-5);
        let mut p = vec![0.3f32, -0.2, 0.1];
        let before = p.clone();
        opt.step(&mut p, &[1.0, 2.0, 3.0], None);
        opt.step(&mut p, &[1.0, 2.0, 3.0], None);
        assert_eq!(p, before);
        let mut opt = RmsProp::<f32>::new(3, 0.1, 0.99, 1e-5);
        opt.step(&mut p, &[1.0, 2.0, 3.0], Some(&[true, false, true]));
        assert_eq!((p[0], p[2]), (before[0], before[2]));
        assert_eq!(opt.square_avg[0], 0.0);
    }

    #[test]
    fn clipping() {
        let mut g = vec![3.0f64, 4.0];
        assert_eq!(clip_grad_norm(&mut g, 0.5), 5.0);
        assert!((grad_norm(&g) - 0.5).abs() < 1e-6);
    }
}
