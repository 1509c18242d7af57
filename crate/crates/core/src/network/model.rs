use rand::Rng;

use crate::board::{Color, Symmetry};
use crate::features::{FeatureTensor, NUM_PLANES};

use super::conv::{conv_backward, conv_forward};
use super::{NetworkError, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerSpec {
    pub kernel: usize,
    pub in_channels: usize,
    pub out_channels: usize,
    pub relu: bool,
}

/// Network shape. Every layer is a same-padded stride-1 convolution with a
/// bias per (channel, point). The last layer has two output planes, the
/// Black-to-move and White-to-move move logits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelSpec {
    pub board_size: usize,
    pub layers: Vec<LayerSpec>,
    pub symmetric: bool,
}

impl ModelSpec {
    /// `depth` convolution layers in total, counting the output layer. The
    /// first is 5×5, the rest 3×3; hidden layers have `filters` channels and
    /// ReLU. A depth of one is a single 5×5 layer straight to the two heads.
    pub fn policy(board_size: usize, depth: usize, filters: usize, symmetric: bool) -> ModelSpec {
        assert!(depth >= 1);
        let mut layers = Vec::with_capacity(depth);
        let mut cin = NUM_PLANES;
        for d in 0..depth {
            let last = d + 1 == depth;
            let cout = if last { 2 } else { filters };
            layers.push(LayerSpec { kernel: if d == 0 { 5 } else { 3 }, in_channels: cin, out_channels: cout, relu: !last });
            cin = cout;
        }
        ModelSpec { board_size, layers, symmetric }
    }

    pub fn validate(&self) -> Result<(), NetworkError> {
        let bad = |m: String| Err(NetworkError::BadSpec(m));
        if !(2..=crate::board::MAX_SIZE).contains(&self.board_size) {
            return bad(format!("board size {}", self.board_size));
        }
        if self.layers.is_empty() {
            return bad("no layers".into());
        }
        for (i, l) in self.layers.iter().enumerate() {
            if l.kernel % 2 == 0 || l.kernel > 2 * self.board_size + 1 || l.in_channels == 0 || l.out_channels == 0 {
                return bad(format!("layer {i}: {l:?}"));
            }
            if i > 0 && self.layers[i - 1].out_channels != l.in_channels {
                return bad(format!("layer {i} expects {} channels, previous layer gives {}", l.in_channels, self.layers[i - 1].out_channels));
            }
        }
        let last = self.layers.last().unwrap();
        if last.out_channels != 2 || last.relu {
            return bad("output layer must be two linear planes".into());
        }
        Ok(())
    }

    pub fn input_planes(&self) -> usize {
        self.layers[0].in_channels
    }

    pub fn param_count(&self) -> usize {
        let hw = self.board_size * self.board_size;
        self.layers.iter().map(|l| l.out_channels * l.in_channels * l.kernel * l.kernel + l.out_channels * hw).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer<T> {
    pub spec: LayerSpec,
    /// `out × in × k × k`
    pub weights: Vec<T>,
    /// `out × size × size`
    pub bias: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model<T: Scalar = f32> {
    pub spec: ModelSpec,
    pub layers: Vec<Layer<T>>,
}

/// Per-layer `(weights, bias)` gradients, shaped like the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient<T> {
    pub layers: Vec<(Vec<T>, Vec<T>)>,
}

impl<T: Scalar> Gradient<T> {
    pub fn max_abs(&self) -> f64 {
        self.layers.iter().flat_map(|(w, b)| w.iter().chain(b)).fold(0.0, |m, v| m.max(v.as_f64().abs()))
    }
}

/// Parameter initialization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Init {
    /// Every weight and bias i.i.d. uniform in `[-r, r]`.
    Uniform(f64),
    /// Weights uniform with variance scaled by fan-in (`6 / fan_in` before a
    /// ReLU, `3 / fan_in` before the softmax); biases start at zero.
    FanIn,
}

/// Training target: the flattened move index and whose head it belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Label {
    pub index: usize,
    pub mover: Color,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MoveDistribution<T = f32> {
    pub head: Color,
    pub probs: Vec<T>,
}

impl<T: Scalar> MoveDistribution<T> {
    /// Highest-probability index, lowest index on ties.
    pub fn argmax(&self) -> usize {
        argmax(&self.probs)
    }
}

pub(crate) fn argmax<T: PartialOrd + Copy>(v: &[T]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate().skip(1) {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// Numerically stable softmax in place.
pub(crate) fn softmax_in_place<T: Scalar>(v: &mut [T]) {
    let max = v.iter().fold(T::neg_infinity(), |m, &x| m.max(x));
    let mut sum = T::zero();
    for x in v.iter_mut() {
        *x = (*x - max).exp();
        sum = sum + *x;
    }
    for x in v.iter_mut() {
        *x = *x / sum;
    }
}

fn head_index(c: Color) -> usize {
    c.index()
}

pub(crate) struct Activations<T> {
    /// `acts[0]` is the input; `acts[l + 1]` the output of layer `l`, after ReLU.
    acts: Vec<Vec<T>>,
}

impl<T: Scalar> Model<T> {
    /// Parameters i.i.d. uniform in `[-range, range]`, projected onto the
    /// symmetric subspace when the spec asks for tied weights.
    pub fn init<R: Rng + ?Sized>(spec: ModelSpec, range: f64, rng: &mut R) -> Result<Model<T>, NetworkError> {
        Model::init_with(spec, Init::Uniform(range), rng)
    }

    pub fn init_with<R: Rng + ?Sized>(spec: ModelSpec, scheme: Init, rng: &mut R) -> Result<Model<T>, NetworkError> {
        spec.validate()?;
        let hw = spec.board_size * spec.board_size;
        let mut draw = |n: usize, range: f64| -> Vec<T> {
            if range == 0.0 {
                return vec![T::zero(); n];
            }
            (0..n).map(|_| T::of_f64(rng.gen_range(-range..=range))).collect()
        };
        let layers = spec
            .layers
            .iter()
            .map(|&l| {
                let (w_range, b_range) = match scheme {
                    Init::Uniform(r) => (r, r),
                    Init::FanIn => {
                        let gain = if l.relu { 6.0 } else { 3.0 };
                        ((gain / (l.in_channels * l.kernel * l.kernel) as f64).sqrt(), 0.0)
                    }
                };
                let weights = draw(l.out_channels * l.in_channels * l.kernel * l.kernel, w_range);
                let bias = draw(l.out_channels * hw, b_range);
                Layer { spec: l, weights, bias }
            })
            .collect();
        let mut m = Model { spec, layers };
        if m.spec.symmetric {
            m.project_symmetric();
        }
        Ok(m)
    }

    pub fn zeros(spec: ModelSpec) -> Result<Model<T>, NetworkError> {
        spec.validate()?;
        let hw = spec.board_size * spec.board_size;
        let layers = spec
            .layers
            .iter()
            .map(|&l| Layer {
                spec: l,
                weights: vec![T::zero(); l.out_channels * l.in_channels * l.kernel * l.kernel],
                bias: vec![T::zero(); l.out_channels * hw],
            })
            .collect();
        Ok(Model { spec, layers })
    }

    pub fn board_size(&self) -> usize {
        self.spec.board_size
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn zero_gradient(&self) -> Gradient<T> {
        Gradient { layers: self.layers.iter().map(|l| (vec![T::zero(); l.weights.len()], vec![T::zero(); l.bias.len()])).collect() }
    }

    /// Converts between precisions.
    pub fn cast<U: Scalar>(&self) -> Model<U> {
        Model {
            spec: self.spec.clone(),
            layers: self
                .layers
                .iter()
                .map(|l| Layer {
                    spec: l.spec,
                    weights: l.weights.iter().map(|v| U::of_f64(v.as_f64())).collect(),
                    bias: l.bias.iter().map(|v| U::of_f64(v.as_f64())).collect(),
                })
                .collect(),
        }
    }

    fn check_input(&self, t: &FeatureTensor) -> Result<(), NetworkError> {
        let planes = self.spec.input_planes();
        if t.num_planes() != planes || t.size() != self.board_size() {
            return Err(NetworkError::ShapeMismatch {
                expected: format!("{planes} planes of {0}x{0}", self.board_size()),
                found: format!("{} planes of {1}x{1}", t.num_planes(), t.size()),
            });
        }
        Ok(())
    }

    /// Packs tensors into the `[plane][example][point]` input layout.
    pub fn pack_inputs(&self, batch: &[FeatureTensor]) -> Result<Vec<T>, NetworkError> {
        let hw = self.board_size() * self.board_size();
        let planes = self.spec.input_planes();
        let bhw = batch.len() * hw;
        let mut input = vec![T::zero(); planes * bhw];
        for (b, t) in batch.iter().enumerate() {
            self.check_input(t)?;
            for k in 0..planes {
                let dst = &mut input[k * bhw + b * hw..k * bhw + (b + 1) * hw];
                t.plane(k).iter().zip(dst.iter_mut()).for_each(|(&s, d)| *d = if s != 0 { T::one() } else { T::zero() });
            }
        }
        Ok(input)
    }

    pub(crate) fn forward_packed(&self, input: Vec<T>, batch: usize) -> Activations<T> {
        let size = self.board_size();
        let bhw = batch * size * size;
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(input);
        let mut cols = Vec::new();
        for layer in &self.layers {
            let l = layer.spec;
            let mut out = vec![T::zero(); l.out_channels * bhw];
            conv_forward(acts.last().unwrap(), &layer.weights, &layer.bias, l.in_channels, l.out_channels, l.kernel, batch, size, &mut cols, &mut out);
            if l.relu {
                out.iter_mut().for_each(|v| *v = v.max(T::zero()));
            }
            acts.push(out);
        }
        Activations { acts }
    }

    /// Raw logits laid out `[head][example][point]`.
    pub fn logits(&self, batch: &[FeatureTensor]) -> Result<Vec<T>, NetworkError> {
        let input = self.pack_inputs(batch)?;
        Ok(self.forward_packed(input, batch.len()).acts.pop().unwrap())
    }

    /// Both heads' move distributions for every example.
    pub fn forward(&self, batch: &[FeatureTensor]) -> Result<Vec<[MoveDistribution<T>; 2]>, NetworkError> {
        let hw = self.board_size() * self.board_size();
        let bhw = batch.len() * hw;
        let logits = self.logits(batch)?;
        Ok((0..batch.len())
            .map(|b| {
                [Color::Black, Color::White].map(|c| {
                    let h = head_index(c);
                    let mut probs = logits[h * bhw + b * hw..h * bhw + (b + 1) * hw].to_vec();
                    softmax_in_place(&mut probs);
                    MoveDistribution { head: c, probs }
                })
            })
            .collect())
    }

    /// Mean cross-entropy of each label under its mover's head, and the
    /// gradient of that mean. Tied models get the group-averaged gradient.
    pub fn loss_and_grad(&self, batch: &[FeatureTensor], labels: &[Label]) -> Result<(T, Gradient<T>), NetworkError> {
        let mut grad = self.zero_gradient();
        let loss = self.accumulate_grad(batch, labels, &mut grad, None)?;
        Ok((loss, grad))
    }

    /// Like [`Model::loss_and_grad`] but accumulates into `grad` and can
    /// report which labels were the top-1 prediction.
    pub(crate) fn accumulate_grad(
        &self,
        batch: &[FeatureTensor],
        labels: &[Label],
        grad: &mut Gradient<T>,
        correct: Option<&mut usize>,
    ) -> Result<T, NetworkError> {
        if batch.len() != labels.len() {
            return Err(NetworkError::ShapeMismatch { expected: format!("{} labels", batch.len()), found: format!("{}", labels.len()) });
        }
        let size = self.board_size();
        let hw = size * size;
        if let Some(l) = labels.iter().find(|l| l.index >= hw) {
            return Err(NetworkError::ShapeMismatch { expected: format!("label < {hw}"), found: l.index.to_string() });
        }
        let n = batch.len();
        let bhw = n * hw;
        let input = self.pack_inputs(batch)?;
        let acts = self.forward_packed(input, n).acts;
        let logits = acts.last().unwrap();
        let scale = T::one() / T::of_f64(n as f64);
        let mut delta = vec![T::zero(); 2 * bhw];
        let mut loss = T::zero();
        let mut hits = 0;
        for (b, lab) in labels.iter().enumerate() {
            let h = head_index(lab.mover);
            let range = h * bhw + b * hw..h * bhw + (b + 1) * hw;
            let mut p = logits[range.clone()].to_vec();
            if argmax(&p) == lab.index {
                hits += 1;
            }
            softmax_in_place(&mut p);
            loss = loss - p[lab.index].max(T::min_positive_value()).ln();
            p[lab.index] = p[lab.index] - T::one();
            for (d, v) in delta[range].iter_mut().zip(p) {
                *d = v * scale;
            }
        }
        if let Some(c) = correct {
            *c += hits;
        }
        let mut cols = Vec::new();
        for li in (0..self.layers.len()).rev() {
            let layer = &self.layers[li];
            let l = layer.spec;
            let input = &acts[li];
            let mut grad_in = (li > 0).then(|| vec![T::zero(); l.in_channels * bhw]);
            let (gw, gb) = &mut grad.layers[li];
            conv_backward(input, &layer.weights, &delta, l.in_channels, l.out_channels, l.kernel, n, size, &mut cols, gw, gb, grad_in.as_deref_mut());
            if let Some(mut gi) = grad_in {
                // The previous layer's output went through ReLU.
                if self.layers[li - 1].spec.relu {
                    for (g, &a) in gi.iter_mut().zip(input.iter()) {
                        if a <= T::zero() {
                            *g = T::zero();
                        }
                    }
                }
                delta = std::mem::take(&mut gi);
            }
        }
        if self.spec.symmetric {
            self.project_gradient(grad);
        }
        Ok(loss * scale)
    }

    /// Plain SGD: `w ← w − lr · grad`.
    pub fn sgd_step(&mut self, grad: &Gradient<T>, lr: f64) {
        let lr = T::of_f64(lr);
        for (layer, (gw, gb)) in self.layers.iter_mut().zip(&grad.layers) {
            for (w, &g) in layer.weights.iter_mut().zip(gw) {
                *w = *w - lr * g;
            }
            for (b, &g) in layer.bias.iter_mut().zip(gb) {
                *b = *b - lr * g;
            }
        }
    }

    /// Replaces every kernel tap and every position bias by the mean over its
    /// orbit under the eight board symmetries.
    pub fn project_symmetric(&mut self) {
        let size = self.board_size();
        let board_orbits = orbits(size);
        for layer in &mut self.layers {
            let k = layer.spec.kernel;
            let kernel_orbits = orbits(k);
            for kernel in layer.weights.chunks_mut(k * k) {
                average_orbits(kernel, &kernel_orbits);
            }
            for plane in layer.bias.chunks_mut(size * size) {
                average_orbits(plane, &board_orbits);
            }
        }
    }

    fn project_gradient(&self, grad: &mut Gradient<T>) {
        let size = self.board_size();
        let board_orbits = orbits(size);
        for (layer, (gw, gb)) in self.layers.iter().zip(grad.layers.iter_mut()) {
            let k = layer.spec.kernel;
            let kernel_orbits = orbits(k);
            for kernel in gw.chunks_mut(k * k) {
                average_orbits(kernel, &kernel_orbits);
            }
            for plane in gb.chunks_mut(size * size) {
                average_orbits(plane, &board_orbits);
            }
        }
    }

    /// Largest change the symmetric projection would make to any parameter.
    pub fn symmetry_residual(&self) -> f64 {
        let mut projected = self.clone();
        projected.project_symmetric();
        self.layers
            .iter()
            .zip(&projected.layers)
            .flat_map(|(a, b)| a.weights.iter().zip(&b.weights).chain(a.bias.iter().zip(&b.bias)))
            .fold(0.0, |m, (x, y)| m.max((x.as_f64() - y.as_f64()).abs()))
    }

    /// Iterates over all parameters, weights before biases, layer by layer.
    pub fn params(&self) -> impl Iterator<Item = &T> {
        self.layers.iter().flat_map(|l| l.weights.iter().chain(l.bias.iter()))
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut T> {
        self.layers.iter_mut().flat_map(|l| l.weights.iter_mut().chain(l.bias.iter_mut()))
    }
}

impl<T: Scalar> Gradient<T> {
    pub fn values(&self) -> impl Iterator<Item = &T> {
        self.layers.iter().flat_map(|(w, b)| w.iter().chain(b.iter()))
    }
}

/// Orbits of the `size × size` grid under D4, as flattened index lists.
pub fn orbits(size: usize) -> Vec<Vec<usize>> {
    let n = size * size;
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for i in 0..n {
        if seen[i] {
            continue;
        }
        let mut orbit: Vec<usize> = Symmetry::all().map(|g| g.apply_index(i, size)).collect();
        orbit.sort_unstable();
        orbit.dedup();
        for &j in &orbit {
            seen[j] = true;
        }
        out.push(orbit);
    }
    out
}

fn average_orbits<T: Scalar>(values: &mut [T], orbits: &[Vec<usize>]) {
    for orbit in orbits {
        // Summing in f64 keeps identical members bit-identical after averaging.
        let mean = orbit.iter().map(|&i| values[i].as_f64()).sum::<f64>() / orbit.len() as f64;
        let mean = T::of_f64(mean);
        for &i in orbit {
            values[i] = mean;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn policy_spec_shapes() {
        let s = ModelSpec::policy(19, 12, 128, false);
        assert_eq!(s.layers.len(), 12);
        assert_eq!(s.layers[0].kernel, 5);
        assert!(s.layers[1..].iter().all(|l| l.kernel == 3));
        assert_eq!(s.layers[11].out_channels, 2);
        s.validate().unwrap();
        let count = s.param_count();
        assert!((1_000_000..5_000_000).contains(&count), "{count}");
        let one = ModelSpec::policy(9, 1, 16, false);
        assert_eq!(one.layers, vec![LayerSpec { kernel: 5, in_channels: 36, out_channels: 2, relu: false }]);
    }

    #[test]
    fn bad_specs_rejected() {
        let mut s = ModelSpec::policy(9, 3, 8, false);
        s.layers[1].in_channels = 7;
        assert!(matches!(s.validate(), Err(NetworkError::BadSpec(_))));
        let mut s = ModelSpec::policy(9, 2, 8, false);
        s.layers[1].relu = true;
        assert!(s.validate().is_err());
    }

    #[test]
    fn seeded_init_is_reproducible() {
        let s = ModelSpec::policy(9, 3, 8, false);
        let a: Model = Model::init(s.clone(), 0.05, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let b: Model = Model::init(s, 0.05, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(a, b);
        assert!(a.params().all(|v| v.abs() <= 0.05));
    }

    #[test]
    fn symmetric_projection_is_idempotent() {
        let s = ModelSpec::policy(9, 3, 4, true);
        let m: Model = Model::init(s, 0.05, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        assert_eq!(m.symmetry_residual(), 0.0);
        let mut again = m.clone();
        again.project_symmetric();
        assert_eq!(again, m);
    }

    #[test]
    fn orbit_sizes() {
        let o = orbits(3);
        assert_eq!(o.len(), 3);
        let o = orbits(19);
        assert_eq!(o.iter().map(Vec::len).sum::<usize>(), 361);
        assert!(o.iter().all(|x| [1, 4, 8].contains(&x.len())));
    }

    #[test]
    fn softmax_shift_invariant() {
        let mut a = vec![0.3f64, -1.2, 2.0, 0.0];
        let mut b: Vec<f64> = a.iter().map(|v| v + 1000.0).collect();
        softmax_in_place(&mut a);
        softmax_in_place(&mut b);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
