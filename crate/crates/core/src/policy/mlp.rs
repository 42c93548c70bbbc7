use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::ActionId;
use crate::prism::print::fmt_decimal;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Identity => "identity",
        }
    }

    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Identity => x,
        }
    }
}

/// Dense layer; `weights` is row-major with one row per output unit.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn weight(&self, row: usize, col: usize) -> f64 {
        self.weights[row * self.inputs + col]
    }

    pub fn apply(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.weights.chunks_exact(self.inputs).zip(&self.bias).map(|(row, b)| {
            let z = row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b;
            self.activation.apply(z)
        }));
    }
}

/// Feed-forward network mapping an observation to one score per action.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpPolicy {
    layers: Vec<Layer>,
}

impl MlpPolicy {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::input("network has no layers"));
        }
        for (i, l) in layers.iter().enumerate() {
            let n = i + 1;
            if l.inputs == 0 || l.outputs == 0 {
                return Err(Error::input(format!("layer {n}: zero-sized dimension")));
            }
            if l.weights.len() != l.inputs * l.outputs || l.bias.len() != l.outputs {
                return Err(Error::input(format!(
                    "layer {n}: expected {}x{} weights and {} biases",
                    l.outputs, l.inputs, l.outputs
                )));
            }
            if i > 0 && layers[i - 1].outputs != l.inputs {
                return Err(Error::input(format!(
                    "layer {n}: input size {} does not match previous layer size {}",
                    l.inputs,
                    layers[i - 1].outputs
                )));
            }
            if l.weights.iter().chain(&l.bias).any(|v| !v.is_finite()) {
                return Err(Error::input(format!("layer {n}: non-finite parameter")));
            }
        }
        Ok(MlpPolicy { layers })
    }

    /// Rectifier hidden layers, identity output, Glorot-uniform weights in
    /// `±sqrt(6 / (fan_in + fan_out))`, zero biases.
    pub fn glorot<R: Rng>(dims: &[usize], rng: &mut R) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::input("a network needs at least input and output sizes"));
        }
        let k = dims.len() - 1;
        let layers = (0..k)
            .map(|i| {
                let (fan_in, fan_out) = (dims[i], dims[i + 1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                Layer {
                    inputs: fan_in,
                    outputs: fan_out,
                    weights: (0..fan_in * fan_out).map(|_| rng.gen_range(-limit..=limit)).collect(),
                    bias: vec![0.0; fan_out],
                    activation: if i + 1 == k {
                        Activation::Identity
                    } else {
                        Activation::Relu
                    },
                }
            })
            .collect();
        Self::new(layers)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Mutable access for trainers; callers keep dimensions unchanged.
    pub(crate) fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().outputs
    }

    /// Layer sizes `d0, d1, ..., dk`.
    pub fn dims(&self) -> Vec<usize> {
        std::iter::once(self.input_dim())
            .chain(self.layers.iter().map(|l| l.outputs))
            .collect()
    }

    pub fn forward(&self, observation: &[f64]) -> Result<Vec<f64>> {
        if observation.len() != self.input_dim() {
            return Err(Error::Dimension {
                expected: self.input_dim(),
                found: observation.len(),
            });
        }
        let mut cur = observation.to_vec();
        let mut next = Vec::new();
        for l in &self.layers {
            l.apply(&cur, &mut next);
            std::mem::swap(&mut cur, &mut next);
        }
        Ok(cur)
    }

    /// Index of the highest score; ties go to the lowest action id.
    pub fn action_of(&self, observation: &[f64]) -> Result<ActionId> {
        Ok(argmax(&self.forward(observation)?))
    }

    /// Copy with every outgoing connection of input feature `i` removed.
    pub fn prune_feature(&self, i: usize) -> Result<MlpPolicy> {
        if i >= self.input_dim() {
            return Err(Error::input(format!(
                "feature index {i} out of range for {} inputs",
                self.input_dim()
            )));
        }
        let mut out = self.clone();
        let first = &mut out.layers[0];
        for row in 0..first.outputs {
            first.weights[row * first.inputs + i] = 0.0;
        }
        Ok(out)
    }

    /// `MLPNET 1` text; weights use shortest round-trip decimals.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "MLPNET 1").unwrap();
        writeln!(s, "layers {}", self.layers.len()).unwrap();
        writeln!(s, "input {}", self.input_dim()).unwrap();
        for l in &self.layers {
            writeln!(s, "layer {} {}", l.outputs, l.activation.name()).unwrap();
        }
        for l in &self.layers {
            for row in l.weights.chunks_exact(l.inputs) {
                writeln!(s, "{}", join(row)).unwrap();
            }
            writeln!(s, "{}", join(&l.bias)).unwrap();
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let mut header = |what: &str| -> Result<(usize, Vec<&str>)> {
            let (n, l) = lines
                .next()
                .ok_or_else(|| Error::input(format!("network file ends before {what}")))?;
            Ok((n, l.split_whitespace().collect()))
        };
        let (n, magic) = header("the header")?;
        if magic != ["MLPNET", "1"] {
            return Err(Error::input(format!("line {n}: expected `MLPNET 1` header")));
        }
        let (n, k) = header("the layer count")?;
        let k = keyed_usize(n, &k, "layers")?;
        let (n, d0) = header("the input size")?;
        let mut prev = keyed_usize(n, &d0, "input")?;
        let mut shapes = Vec::with_capacity(k);
        for i in 0..k {
            let (n, f) = header(&format!("layer {} declaration", i + 1))?;
            let [kw, dim, act] = f.as_slice() else {
                return Err(Error::input(format!(
                    "line {n}: expected `layer <dim> <relu|identity>`"
                )));
            };
            if *kw != "layer" {
                return Err(Error::input(format!("line {n}: expected `layer`")));
            }
            let dim: usize = dim
                .parse()
                .map_err(|_| Error::input(format!("line {n}: bad layer size `{dim}`")))?;
            let activation = match *act {
                "relu" => Activation::Relu,
                "identity" => Activation::Identity,
                other => return Err(Error::input(format!("line {n}: unknown activation `{other}`"))),
            };
            shapes.push((prev, dim, activation));
            prev = dim;
        }
        let mut layers = Vec::with_capacity(k);
        for (i, &(inputs, outputs, activation)) in shapes.iter().enumerate() {
            let li = i + 1;
            let mut weights = Vec::with_capacity(inputs * outputs);
            for r in 0..outputs {
                let (n, row) = lines.next().ok_or_else(|| {
                    Error::input(format!(
                        "layer {li}: expected {outputs} weight rows and a bias row, found {r} rows"
                    ))
                })?;
                weights.extend(parse_row(n, row, inputs, li)?);
            }
            let (n, b) = lines
                .next()
                .ok_or_else(|| Error::input(format!("layer {li}: missing bias row")))?;
            let bias = parse_row(n, b, outputs, li)?;
            layers.push(Layer {
                inputs,
                outputs,
                weights,
                bias,
                activation,
            });
        }
        if let Some((n, _)) = lines.next() {
            return Err(Error::input(format!("line {n}: unexpected trailing data")));
        }
        Self::new(layers)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

pub(crate) fn argmax(scores: &[f64]) -> ActionId {
    let mut best = 0;
    for (i, &v) in scores.iter().enumerate().skip(1) {
        if v > scores[best] {
            best = i;
        }
    }
    best
}

fn join(xs: &[f64]) -> String {
    xs.iter().map(|&x| fmt_decimal(x)).collect::<Vec<_>>().join(" ")
}

fn keyed_usize(line: usize, fields: &[&str], key: &str) -> Result<usize> {
    match fields {
        [k, v] if *k == key => v
            .parse()
            .map_err(|_| Error::input(format!("line {line}: bad `{key}` value `{v}`"))),
        _ => Err(Error::input(format!("line {line}: expected `{key} <n>`"))),
    }
}

fn parse_row(line: usize, text: &str, expected: usize, layer: usize) -> Result<Vec<f64>> {
    let vals = text
        .split_whitespace()
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::input(format!("line {line} (layer {layer}): bad number `{t}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    if vals.len() != expected {
        return Err(Error::input(format!(
            "line {line} (layer {layer}): expected {expected} values, found {}",
            vals.len()
        )));
    }
    Ok(vals)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn identity2() -> MlpPolicy {
        MlpPolicy::new(vec![Layer {
            inputs: 2,
            outputs: 2,
            weights: vec![1.0, 0.0, 0.0, 1.0],
            bias: vec![0.0, 0.0],
            activation: Activation::Identity,
        }])
        .unwrap()
    }

    #[test]
    fn identity_forward_and_argmax() {
        let p = identity2();
        assert_eq!(p.forward(&[0.2, 0.9]).unwrap(), vec![0.2, 0.9]);
        assert_eq!(p.action_of(&[0.2, 0.9]).unwrap(), 1);
        assert_eq!(p.action_of(&[0.5, 0.5]).unwrap(), 0);
        assert!(matches!(
            p.forward(&[1.0]),
            Err(Error::Dimension { expected: 2, found: 1 })
        ));
    }

    #[test]
    fn hand_computed_two_layer_net() {
        // h = relu([[1,-1],[2,0.5]] o + [0.5,-1]); y = [[1,1],[-1,2]] h + [0,0.25]
        let p = MlpPolicy::new(vec![
            Layer {
                inputs: 2,
                outputs: 2,
                weights: vec![1.0, -1.0, 2.0, 0.5],
                bias: vec![0.5, -1.0],
                activation: Activation::Relu,
            },
            Layer {
                inputs: 2,
                outputs: 2,
                weights: vec![1.0, 1.0, -1.0, 2.0],
                bias: vec![0.0, 0.25],
                activation: Activation::Identity,
            },
        ])
        .unwrap();
        // o = (1, 3): pre = (-1.5, 2.5) -> h = (0, 2.5); y = (2.5, 5.25)
        assert_eq!(p.forward(&[1.0, 3.0]).unwrap(), vec![2.5, 5.25]);
        assert_eq!(p.action_of(&[1.0, 3.0]).unwrap(), 1);
        // o = (2, 0): pre = (2.5, 3) -> h = (2.5, 3); y = (5.5, 3.75)
        assert_eq!(p.forward(&[2.0, 0.0]).unwrap(), vec![5.5, 3.75]);
        assert_eq!(p.action_of(&[2.0, 0.0]).unwrap(), 0);
    }

    #[test]
    fn pruning() {
        let p = identity2();
        let q = p.prune_feature(0).unwrap();
        assert_eq!(q.forward(&[5.0, 3.0]).unwrap(), vec![0.0, 3.0]);
        assert_eq!(p.forward(&[5.0, 3.0]).unwrap(), vec![5.0, 3.0]);
        assert_eq!(q.prune_feature(0).unwrap(), q);
        assert!(p.prune_feature(2).is_err());
    }

    #[test]
    fn text_round_trip_is_bitwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = MlpPolicy::glorot(&[5, 7, 3], &mut rng).unwrap();
        let q = MlpPolicy::from_text(&p.to_text()).unwrap();
        for (a, b) in p.layers().iter().zip(q.layers()) {
            let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(&a.weights), bits(&b.weights));
            assert_eq!(bits(&a.bias), bits(&b.bias));
        }
        assert_eq!(p.layers()[0].activation, Activation::Relu);
        assert_eq!(p.layers()[1].activation, Activation::Identity);
    }

    #[test]
    fn glorot_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p = MlpPolicy::glorot(&[4, 8, 2], &mut rng).unwrap();
        let lim = (6.0f64 / 12.0).sqrt();
        assert!(p.layers()[0].weights.iter().all(|w| w.abs() <= lim));
        assert!(p.layers()[0].bias.iter().all(|&b| b == 0.0));
    }

    #[test]
    fn malformed_files_name_the_layer() {
        let mut text = String::from("MLPNET 1\nlayers 2\ninput 2\nlayer 3 relu\nlayer 2 identity\n");
        for _ in 0..2 {
            text.push_str("0 0\n");
        }
        let err = MlpPolicy::from_text(&text).unwrap_err().to_string();
        assert!(err.contains("layer 1"), "{err}");
        assert!(MlpPolicy::from_text("MLPNET 2\n").is_err());
        let nan = "MLPNET 1\nlayers 1\ninput 1\nlayer 1 identity\nNaN\n0\n";
        assert!(MlpPolicy::from_text(nan)
            .unwrap_err()
            .to_string()
            .contains("non-finite"));
    }
}
