use crate::geometry::Point;

/// Adam over 2D points, with bias correction.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub m: Vec<Point>,
    pub v: Vec<Point>,
    /// Steps taken so far.
    pub t: usize,
}

impl Adam {
    pub fn new(len: usize, beta1: f64, beta2: f64, epsilon: f64) -> Self {
        Self {
            beta1,
            beta2,
            epsilon,
            m: vec![Point::ZERO; len],
            v: vec![Point::ZERO; len],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [Point], grad: &[Point], lr: f64) {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(grad.len(), self.m.len());
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t as i32);
        let c2 = 1.0 - self.beta2.powi(self.t as i32);
        let (b1, b2, eps) = (self.beta1, self.beta2, self.epsilon);
        let update = |m: &mut f64, v: &mut f64, g: f64| -> f64 {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            lr * (*m / c1) / ((*v / c2).sqrt() + eps)
        };
        for i in 0..params.len() {
            let (m, v, g) = (&mut self.m[i], &mut self.v[i], grad[i]);
            params[i].x -= update(&mut m.x, &mut v.x, g.x);
            params[i].y -= update(&mut m.y, &mut v.y, g.y);
        }
    }
}

/// Learning rate schedule: linear warmup to `base`, then cosine decay to `floor`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrSchedule {
    pub base: f64,
    pub warmup_steps: usize,
    pub floor: f64,
    pub total_steps: usize,
}

impl LrSchedule {
    pub fn at(&self, step: usize) -> f64 {
        if step < self.warmup_steps {
            return self.base * (step + 1) as f64 / self.warmup_steps as f64;
        }
        let span = self.total_steps.saturating_sub(self.warmup_steps).max(1) as f64;
        let progress = ((step - self.warmup_steps) as f64 / span).min(1.0);
        self.floor + (self.base - self.floor) * 0.5 * (1.0 + (std::f64::consts::PI * progress).cos())
    }
}
