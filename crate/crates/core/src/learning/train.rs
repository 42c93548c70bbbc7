use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::induction::{induce, InduceOptions};
use crate::model::{ActionId, ExplicitMdp, ObservationTable};
use crate::policy::{argmax, Activation, MlpPolicy, StatePolicy};
use crate::random::derive_seed;

use super::config::TrainConfig;

/// One supervised example: observation and expert action.
#[derive(Debug, Clone, PartialEq)]
pub struct Demo {
    pub observation: Vec<f64>,
    pub action: ActionId,
}

/// Reads `f1,...,fd,action_id` rows (header required).
pub fn read_demos<R: Read>(reader: R) -> Result<Vec<Demo>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.iter().next_back() != Some("action_id") {
        return Err(Error::input("demo table must end with an `action_id` column"));
    }
    let d = headers.len() - 1;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        if rec.len() != d + 1 {
            return Err(Error::input(format!("line {line}: expected {} fields", d + 1)));
        }
        let observation = rec
            .iter()
            .take(d)
            .map(|v| {
                v.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| Error::input(format!("line {line}: bad value `{v}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        let action = rec[d]
            .parse()
            .map_err(|_| Error::input(format!("line {line}: bad action id `{}`", &rec[d])))?;
        out.push(Demo { observation, action });
    }
    Ok(out)
}

pub fn load_demos(path: &Path) -> Result<Vec<Demo>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_demos(f)
}

pub fn write_demos<W: Write>(w: W, demos: &[Demo]) -> Result<()> {
    let d = demos.first().map_or(0, |x| x.observation.len());
    let mut out = csv::Writer::from_writer(w);
    let mut header: Vec<String> = (1..=d).map(|i| format!("f{i}")).collect();
    header.push("action_id".into());
    out.write_record(&header)?;
    for x in demos {
        let mut rec: Vec<String> = x.observation.iter().map(|v| format!("{v:?}")).collect();
        rec.push(x.action.to_string());
        out.write_record(&rec)?;
    }
    out.flush().map_err(|e| Error::io("<demos>", e))?;
    Ok(())
}

/// Demonstrations of `policy` at the decision states (two or more enabled
/// actions) of its own induced chain, in ascending state order.
pub fn demos_from_policy(m: &ExplicitMdp, policy: &dyn StatePolicy, obs: &ObservationTable) -> Result<Vec<Demo>> {
    let chain = induce(m, policy, obs, None, &InduceOptions::default())?;
    Ok(chain
        .original_ids
        .iter()
        .zip(&chain.chosen_actions)
        .filter(|(&s, _)| m.choices[s].len() > 1)
        .map(|(&s, &a)| Demo {
            observation: obs.observe(s).into_owned(),
            action: a,
        })
        .collect())
}

/// Parameter gradients, shaped like the network's layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    /// Per layer: (weights, bias), same layout as [`crate::policy::Layer`].
    pub layers: Vec<(Vec<f64>, Vec<f64>)>,
}

impl Gradient {
    fn zeros(net: &MlpPolicy) -> Self {
        Gradient {
            layers: net
                .layers()
                .iter()
                .map(|l| (vec![0.0; l.weights.len()], vec![0.0; l.bias.len()]))
                .collect(),
        }
    }
}

fn check_batch(net: &MlpPolicy, batch: &[Demo]) -> Result<()> {
    for x in batch {
        if x.observation.len() != net.input_dim() {
            return Err(Error::Dimension {
                expected: net.input_dim(),
                found: x.observation.len(),
            });
        }
        if x.action >= net.output_dim() {
            return Err(Error::input(format!(
                "demo action {} out of range for {} outputs",
                x.action,
                net.output_dim()
            )));
        }
    }
    Ok(())
}

/// Mean softmax cross-entropy of the batch.
pub fn loss(net: &MlpPolicy, batch: &[Demo]) -> Result<f64> {
    check_batch(net, batch)?;
    let mut total = 0.0;
    for x in batch {
        let z = net.forward(&x.observation)?;
        total += log_sum_exp(&z) - z[x.action];
    }
    Ok(total / batch.len().max(1) as f64)
}

fn log_sum_exp(z: &[f64]) -> f64 {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// Mean softmax cross-entropy and its exact gradient by backpropagation.
pub fn loss_and_gradient(net: &MlpPolicy, batch: &[Demo]) -> Result<(f64, Gradient)> {
    check_batch(net, batch)?;
    let mut grad = Gradient::zeros(net);
    let layers = net.layers();
    let scale = 1.0 / batch.len().max(1) as f64;
    let mut total = 0.0;
    // activations[l] is the input of layer l; pre[l] its pre-activation.
    let mut activations: Vec<Vec<f64>> = Vec::with_capacity(layers.len() + 1);
    let mut pre: Vec<Vec<f64>> = Vec::with_capacity(layers.len());
    for x in batch {
        activations.clear();
        pre.clear();
        activations.push(x.observation.clone());
        for l in layers {
            let input = activations.last().unwrap();
            let z: Vec<f64> = l
                .weights
                .chunks_exact(l.inputs)
                .zip(&l.bias)
                .map(|(row, b)| row.iter().zip(input).map(|(w, v)| w * v).sum::<f64>() + b)
                .collect();
            activations.push(z.iter().map(|&v| l.activation.apply(v)).collect());
            pre.push(z);
        }
        let z = activations.last().unwrap();
        let lse = log_sum_exp(z);
        total += lse - z[x.action];
        // d loss / d output scores.
        let mut delta: Vec<f64> = z.iter().map(|&v| (v - lse).exp() * scale).collect();
        delta[x.action] -= scale;
        for (li, l) in layers.iter().enumerate().rev() {
            if l.activation == Activation::Relu {
                for (d, &p) in delta.iter_mut().zip(&pre[li]) {
                    if p <= 0.0 {
                        *d = 0.0;
                    }
                }
            }
            let input = &activations[li];
            let (gw, gb) = &mut grad.layers[li];
            for (r, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                gb[r] += d;
                for (g, &v) in gw[r * l.inputs..(r + 1) * l.inputs].iter_mut().zip(input) {
                    *g += d * v;
                }
            }
            if li > 0 {
                let mut back = vec![0.0; l.inputs];
                for (r, &d) in delta.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    for (b, &w) in back.iter_mut().zip(&l.weights[r * l.inputs..(r + 1) * l.inputs]) {
                        *b += d * w;
                    }
                }
                delta = back;
            }
        }
    }
    Ok((total * scale, grad))
}

/// Fraction of demos whose action the network reproduces.
pub fn accuracy(net: &MlpPolicy, demos: &[Demo]) -> Result<f64> {
    if demos.is_empty() {
        return Ok(1.0);
    }
    let mut hits = 0;
    for x in demos {
        if argmax(&net.forward(&x.observation)?) == x.action {
            hits += 1;
        }
    }
    Ok(hits as f64 / demos.len() as f64)
}

/// Adam optimizer state.
#[derive(Debug, Clone)]
pub(crate) struct Adam {
    lr: f64,
    t: i32,
    m: Gradient,
    v: Gradient,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    pub fn new(net: &MlpPolicy, lr: f64) -> Self {
        Adam {
            lr,
            t: 0,
            m: Gradient::zeros(net),
            v: Gradient::zeros(net),
        }
    }

    pub fn step(&mut self, net: &mut MlpPolicy, g: &Gradient) {
        self.t += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.t);
        let c2 = 1.0 - Self::BETA2.powi(self.t);
        for (li, layer) in net.layers_mut().iter_mut().enumerate() {
            let (gw, gb) = &g.layers[li];
            let (mw, mb) = &mut self.m.layers[li];
            let (vw, vb) = &mut self.v.layers[li];
            for (params, grads, m, v) in [(&mut layer.weights, gw, mw, vw), (&mut layer.bias, gb, mb, vb)] {
                for i in 0..params.len() {
                    m[i] = Self::BETA1 * m[i] + (1.0 - Self::BETA1) * grads[i];
                    v[i] = Self::BETA2 * v[i] + (1.0 - Self::BETA2) * grads[i] * grads[i];
                    params[i] -= self.lr * (m[i] / c1) / ((v[i] / c2).sqrt() + Self::EPS);
                }
            }
        }
    }
}

/// Per-epoch training record; `intervention_rate` is set during fine-tuning.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub loss: f64,
    pub accuracy: f64,
    pub intervention_rate: Option<f64>,
}

/// `epoch,loss,accuracy,intervention_rate`
pub fn write_training_log<W: Write>(w: W, log: &[EpochLog]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["epoch", "loss", "accuracy", "intervention_rate"])?;
    for e in log {
        out.write_record([
            e.epoch.to_string(),
            format!("{:.6}", e.loss),
            format!("{:.6}", e.accuracy),
            e.intervention_rate.map(|r| format!("{r:.6}")).unwrap_or_default(),
        ])?;
    }
    out.flush().map_err(|e| Error::io("<training log>", e))?;
    Ok(())
}

/// Runs `epochs` passes of shuffled mini-batch Adam over `demos`, in place.
/// `stream` separates the shuffling streams of successive calls.
pub(crate) fn train_epochs(
    net: &mut MlpPolicy,
    opt: &mut Adam,
    demos: &[Demo],
    epochs: usize,
    cfg: &TrainConfig,
    stream: u64,
    first_epoch: usize,
) -> Result<Vec<EpochLog>> {
    check_batch(net, demos)?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 0x5348_5546, stream));
    let mut order: Vec<usize> = (0..demos.len()).collect();
    let mut logs = Vec::with_capacity(epochs);
    let mut batch = Vec::with_capacity(cfg.batch_size);
    for e in 0..epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| demos[i].clone()));
            let (l, g) = loss_and_gradient(net, &batch)?;
            total += l * chunk.len() as f64;
            opt.step(net, &g);
        }
        logs.push(EpochLog {
            epoch: first_epoch + e,
            loss: total / demos.len() as f64,
            accuracy: accuracy(net, demos)?,
            intervention_rate: None,
        });
    }
    Ok(logs)
}

/// Behavioral cloning: fresh Glorot-initialized network trained with Adam on
/// softmax cross-entropy against the demonstrated actions.
pub fn clone_behavior(demos: &[Demo], n_actions: usize, cfg: &TrainConfig) -> Result<(MlpPolicy, Vec<EpochLog>)> {
    cfg.validate()?;
    let first = demos
        .first()
        .ok_or_else(|| Error::input("no demonstrations to learn from"))?;
    let d = first.observation.len();
    if d == 0 || n_actions == 0 {
        return Err(Error::input("observations and action set must be nonempty"));
    }
    let mut dims = vec![d];
    dims.extend(&cfg.hidden);
    dims.push(n_actions);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 0x494E_4954, 0));
    let mut net = MlpPolicy::glorot(&dims, &mut rng)?;
    let mut opt = Adam::new(&net, cfg.learning_rate);
    let logs = train_epochs(&mut net, &mut opt, demos, cfg.bc_epochs, cfg, 0, 1)?;
    Ok((net, logs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn demo(o: &[f64], a: usize) -> Demo {
        Demo {
            observation: o.to_vec(),
            action: a,
        }
    }

    #[test]
    fn scheduler_demos_cover_decision_states() {
        use crate::pctl::{check_mdp, parse_property};
        let m = crate::model::tests::listing_one();
        let f = parse_property(r#"Pmax=? [ F "survival" ]"#).unwrap();
        let sched = check_mdp(&m, &f).unwrap().scheduler.unwrap();
        let demos = demos_from_policy(&m, &sched, &ObservationTable::one_hot(4)).unwrap();
        // State 0 decides; states 1-3 have a single action.
        assert_eq!(demos, vec![demo(&[1.0, 0.0, 0.0, 0.0], 0)]);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let net = MlpPolicy::glorot(&[3, 5, 4, 2], &mut rng).unwrap();
        let batch: Vec<Demo> = (0..6)
            .map(|_| {
                demo(
                    &[
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                    ],
                    rng.gen_range(0..2),
                )
            })
            .collect();
        let (l0, g) = loss_and_gradient(&net, &batch).unwrap();
        assert!((l0 - loss(&net, &batch).unwrap()).abs() < 1e-12);
        let h = 1e-5;
        for li in 0..net.layers().len() {
            for wi in 0..net.layers()[li].weights.len() {
                let mut layers = net.layers().to_vec();
                layers[li].weights[wi] += h;
                let up = loss(&MlpPolicy::new(layers.clone()).unwrap(), &batch).unwrap();
                layers[li].weights[wi] -= 2.0 * h;
                let down = loss(&MlpPolicy::new(layers).unwrap(), &batch).unwrap();
                let num = (up - down) / (2.0 * h);
                let ana = g.layers[li].0[wi];
                let rel = (ana - num).abs() / ana.abs().max(num.abs()).max(1e-6);
                assert!(rel < 1e-4, "layer {li} weight {wi}: {ana} vs {num}");
            }
        }
    }

    #[test]
    fn separable_data_is_learned() {
        let demos: Vec<Demo> = (0..20)
            .map(|i| {
                let x = i as f64 / 10.0 - 1.0;
                demo(&[x, 1.0 - x], usize::from(x > 0.05))
            })
            .collect();
        let cfg = TrainConfig {
            bc_epochs: 200,
            learning_rate: 0.01,
            hidden: vec![8],
            ..Default::default()
        };
        let (net, log) = clone_behavior(&demos, 2, &cfg).unwrap();
        assert_eq!(accuracy(&net, &demos).unwrap(), 1.0);
        assert_eq!(log.len(), 200);
        assert!(log.last().unwrap().loss < log[0].loss);
    }

    #[test]
    fn single_demo_is_memorized() {
        let demos = vec![demo(&[0.3, -0.7, 2.0], 2)];
        let cfg = TrainConfig {
            bc_epochs: 100,
            learning_rate: 0.01,
            hidden: vec![4],
            ..Default::default()
        };
        let (net, _) = clone_behavior(&demos, 3, &cfg).unwrap();
        assert_eq!(net.action_of(&[0.3, -0.7, 2.0]).unwrap(), 2);
    }

    #[test]
    fn seeded_training_is_reproducible() {
        let demos = vec![demo(&[0.0, 1.0], 0), demo(&[1.0, 0.0], 1)];
        let cfg = TrainConfig {
            bc_epochs: 5,
            hidden: vec![3],
            seed: 4,
            ..Default::default()
        };
        let a = clone_behavior(&demos, 2, &cfg).unwrap().0.to_text();
        let b = clone_behavior(&demos, 2, &cfg).unwrap().0.to_text();
        assert_eq!(a, b);
    }

    #[test]
    fn demo_csv_and_errors() {
        let demos = vec![demo(&[0.5, 1.0], 1), demo(&[0.25, -3.0], 0)];
        let mut buf = Vec::new();
        write_demos(&mut buf, &demos).unwrap();
        assert_eq!(read_demos(buf.as_slice()).unwrap(), demos);
        assert!(read_demos("f1,action\n1,0\n".as_bytes()).is_err());
        let cfg = TrainConfig::default();
        assert!(clone_behavior(&[], 2, &cfg).is_err());
        let bad = vec![demo(&[0.0], 0), demo(&[0.0, 1.0], 0)];
        assert!(matches!(clone_behavior(&bad, 2, &cfg), Err(Error::Dimension { .. })));
    }
}
