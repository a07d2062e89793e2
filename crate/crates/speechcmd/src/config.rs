//! Toolkit configuration: `key = value` lines under `[section]` headers.
//!
//! Later sources override earlier ones: built-in defaults, then the config
//! file, then command-line settings.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use speechcmd_core::augment::AugmentConfig;
use speechcmd_core::nn::{build_cnn2d, build_resnet1d, build_vgg1d, ModelSpec, ResNetConfig, TrainConfig};

use crate::error::{Error, IoContext, Result};
use crate::features::{FeatureConfig, Representation};

pub const EFFECTIVE_CONFIG: &str = "effective_config";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arch {
    Vgg1d,
    Resnet1d,
    Cnn2d,
}

impl Arch {
    pub fn name(self) -> &'static str {
        match self {
            Arch::Vgg1d => "vgg1d",
            Arch::Resnet1d => "resnet1d",
            Arch::Cnn2d => "cnn2d",
        }
    }
}

impl FromStr for Arch {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "vgg1d" => Ok(Arch::Vgg1d),
            "resnet1d" => Ok(Arch::Resnet1d),
            "cnn2d" => Ok(Arch::Cnn2d),
            _ => Err(format!("unknown arch {s:?} (vgg1d, resnet1d, cnn2d)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub arch: Arch,
    pub width: usize,
    pub resnet: ResNetConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSettings {
    pub epochs: usize,
    pub batch_size: usize,
    /// 0 means one pass over the training entries.
    pub batches_per_epoch: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Held-out fold; negative trains on every fold.
    pub fold_out: i32,
    pub keep_best: bool,
    /// Stop once training accuracy reaches this; 0 disables the check.
    pub stop_at_train_accuracy: f32,
    /// Train with augmentation (silence entries are never augmented).
    pub augment: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToolkitConfig {
    pub seed: u64,
    /// 0 lets the thread pool decide.
    pub jobs: usize,
    pub features: FeatureConfig,
    pub augment: AugmentConfig,
    pub model: ModelConfig,
    pub train: TrainSettings,
    pub n_folds: usize,
    pub silence_threshold: f32,
    /// Cap silence fragments at the median class count.
    pub cap_silence: bool,
    pub unknown_threshold: f32,
}

impl Default for ToolkitConfig {
    fn default() -> Self {
        ToolkitConfig {
            seed: 0,
            jobs: 0,
            features: FeatureConfig::default(),
            augment: AugmentConfig::default(),
            model: ModelConfig { arch: Arch::Vgg1d, width: 1, resnet: ResNetConfig::default() },
            train: TrainSettings {
                epochs: 20,
                batch_size: 24,
                batches_per_epoch: 0,
                lr: 1e-3,
                beta1: 0.9,
                beta2: 0.999,
                eps: 1e-8,
                fold_out: 0,
                keep_best: true,
                stop_at_train_accuracy: 0.0,
                augment: true,
            },
            n_folds: 4,
            silence_threshold: speechcmd_core::wav_io::DEFAULT_SILENCE_THRESHOLD,
            cap_silence: true,
            unknown_threshold: 0.0,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, String> {
    value.parse().map_err(|_| format!("bad value {value:?} for {key}"))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, String> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(format!("bad boolean {value:?} for {key}")),
    }
}

fn parse_list(key: &str, value: &str) -> Result<Vec<usize>, String> {
    value.split(',').map(|v| parse(key, v.trim())).collect()
}

fn join(v: &[usize]) -> String {
    v.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

impl ToolkitConfig {
    /// Sets `section.key`; `section` may be empty for top-level keys.
    pub fn set(&mut self, section: &str, key: &str, value: &str) -> Result<(), String> {
        let v = value.trim();
        let full = if section.is_empty() { key.to_string() } else { format!("{section}.{key}") };
        let k = full.as_str();
        let f = &mut self.features;
        match k {
            "seed" | "global.seed" => self.seed = parse(k, v)?,
            "jobs" | "global.jobs" => self.jobs = parse(k, v)?,
            "stft.win_length" => f.stft.win_length = parse(k, v)?,
            "stft.hop_length" => f.stft.hop_length = parse(k, v)?,
            "stft.fft_size" => f.stft.fft_size = parse(k, v)?,
            "stft.sample_rate" => f.stft.sample_rate = parse(k, v)?,
            "stft.exact_dft" => f.stft.exact_dft = parse_bool(k, v)?,
            "mel.n_mels" => f.n_mels = parse(k, v)?,
            "mel.fmin" => f.fmin = parse(k, v)?,
            "mel.fmax" => f.fmax = parse(k, v)?,
            "mel.n_coeffs" => f.n_coeffs = parse(k, v)?,
            "features.representation" => f.representation = v.parse().map_err(|e: Error| e.to_string())?,
            "features.db_ref" => f.db_ref = parse(k, v)?,
            "features.top_db" => {
                let t: f64 = parse(k, v)?;
                f.top_db = (t > 0.0).then_some(t);
            }
            "features.clip_length" => f.clip_length = parse(k, v)?,
            "augment.speed_min" => self.augment.speed_min = parse(k, v)?,
            "augment.speed_max" => self.augment.speed_max = parse(k, v)?,
            "augment.shift_max_s" => self.augment.shift_max = parse(k, v)?,
            "augment.noise_max" => self.augment.noise_max = parse(k, v)?,
            "augment.target_length" => {
                self.augment.target_length = parse(k, v)?;
                f.wave_length = self.augment.target_length;
            }
            "augment.seed" => self.augment.seed = parse(k, v)?,
            "model.arch" => self.model.arch = v.parse()?,
            "model.width" => self.model.width = parse(k, v)?,
            "model.resnet_stem" => self.model.resnet.stem_channels = parse(k, v)?,
            "model.resnet_channels" => self.model.resnet.stage_channels = parse_list(k, v)?,
            "model.resnet_repeats" => self.model.resnet.repeats = parse_list(k, v)?,
            "train.epochs" => self.train.epochs = parse(k, v)?,
            "train.batch_size" => self.train.batch_size = parse(k, v)?,
            "train.batches_per_epoch" => self.train.batches_per_epoch = parse(k, v)?,
            "train.lr" => self.train.lr = parse(k, v)?,
            "train.beta1" => self.train.beta1 = parse(k, v)?,
            "train.beta2" => self.train.beta2 = parse(k, v)?,
            "train.eps" => self.train.eps = parse(k, v)?,
            "train.fold_out" => self.train.fold_out = parse(k, v)?,
            "train.keep_best" => self.train.keep_best = parse_bool(k, v)?,
            "train.stop_at_train_accuracy" => self.train.stop_at_train_accuracy = parse(k, v)?,
            "train.augment" => self.train.augment = parse_bool(k, v)?,
            "dataset.n_folds" => self.n_folds = parse(k, v)?,
            "dataset.silence_threshold" => self.silence_threshold = parse(k, v)?,
            "dataset.cap_silence" => self.cap_silence = parse_bool(k, v)?,
            "eval.unknown_threshold" => self.unknown_threshold = parse(k, v)?,
            _ => return Err(format!("unknown key {k}")),
        }
        Ok(())
    }

    /// Applies a `section.key=value` override.
    pub fn set_dotted(&mut self, assignment: &str) -> Result<()> {
        let bad = |m: String| Error::Config { line: 0, message: m };
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| bad(format!("expected section.key=value, got {assignment:?}")))?;
        let (section, key) = key.trim().rsplit_once('.').unwrap_or(("", key.trim()));
        self.set(section, key, value).map_err(bad)
    }

    /// Applies every assignment in `text` on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        let mut section = String::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            let err = |message: String| Error::Config { line: i + 1, message };
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                section = name
                    .strip_suffix(']')
                    .ok_or_else(|| err(format!("unterminated section header {line:?}")))?
                    .trim()
                    .to_string();
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| err(format!("expected key = value, got {line:?}")))?;
            self.set(&section, key.trim(), value).map_err(err)?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let mut c = ToolkitConfig::default();
        c.apply_text(&std::fs::read_to_string(path).at(path)?)?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config { line: 0, message: m.to_string() });
        self.features.validate()?;
        self.augment.validate()?;
        if self.features.fmax > self.features.stft.sample_rate as f64 / 2.0 || self.features.fmin >= self.features.fmax {
            return bad("need 0 <= mel.fmin < mel.fmax <= sample_rate / 2");
        }
        if self.train.batch_size == 0 || self.train.batch_size % 12 != 0 {
            return bad("train.batch_size must be a positive multiple of 12");
        }
        if self.n_folds < 2 {
            return bad("dataset.n_folds must be at least 2");
        }
        if self.train.fold_out >= self.n_folds as i32 {
            return bad("train.fold_out must be below dataset.n_folds");
        }
        if self.model.width == 0 {
            return bad("model.width must be positive");
        }
        Ok(())
    }

    /// Checks that the model section pairs with the feature representation.
    pub fn validate_model(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config { line: 0, message: m.to_string() });
        self.validate()?;
        let wave = self.features.representation == Representation::Wave;
        match self.model.arch {
            Arch::Vgg1d | Arch::Resnet1d if !wave => bad("1-D models need features.representation = wave"),
            Arch::Cnn2d if wave => bad("cnn2d needs a spectral representation"),
            _ => {
                self.model_spec()?;
                Ok(())
            }
        }
    }

    pub fn model_spec(&self) -> Result<ModelSpec> {
        let mut spec = match self.model.arch {
            Arch::Vgg1d => build_vgg1d(self.model.width),
            Arch::Resnet1d => build_resnet1d(&self.model.resnet),
            Arch::Cnn2d => {
                let s = self.features.input_shape();
                build_cnn2d(s[1], s[2])
            }
        };
        if self.model.arch != Arch::Cnn2d {
            spec.input_shape = self.features.input_shape();
        }
        spec.shapes()?;
        Ok(spec)
    }

    pub fn train_config(&self) -> TrainConfig {
        let t = &self.train;
        TrainConfig {
            epochs: t.epochs,
            batch_size: t.batch_size,
            batches_per_epoch: (t.batches_per_epoch > 0).then_some(t.batches_per_epoch),
            lr: t.lr,
            beta1: t.beta1,
            beta2: t.beta2,
            eps: t.eps,
            seed: self.seed,
            eval_train_accuracy: t.stop_at_train_accuracy > 0.0,
            stop_at_train_accuracy: (t.stop_at_train_accuracy > 0.0).then_some(t.stop_at_train_accuracy),
            keep_best: t.keep_best,
            eval_batch: 32,
        }
    }

    /// Full config in the file format; parsing it reproduces `self`.
    pub fn to_text(&self) -> String {
        let f = &self.features;
        let a = &self.augment;
        let t = &self.train;
        let m = &self.model;
        let mut s = String::new();
        let _ = writeln!(s, "[global]\nseed = {}\njobs = {}\n", self.seed, self.jobs);
        let _ = writeln!(
            s,
            "[stft]\nwin_length = {}\nhop_length = {}\nfft_size = {}\nsample_rate = {}\nexact_dft = {}\n",
            f.stft.win_length, f.stft.hop_length, f.stft.fft_size, f.stft.sample_rate, f.stft.exact_dft
        );
        let _ = writeln!(
            s,
            "[mel]\nn_mels = {}\nfmin = {:?}\nfmax = {:?}\nn_coeffs = {}\n",
            f.n_mels, f.fmin, f.fmax, f.n_coeffs
        );
        let _ = writeln!(
            s,
            "[features]\nrepresentation = {}\ndb_ref = {:?}\ntop_db = {:?}\nclip_length = {}\n",
            f.representation,
            f.db_ref,
            f.top_db.unwrap_or(0.0),
            f.clip_length
        );
        let _ = writeln!(
            s,
            "[augment]\nspeed_min = {:?}\nspeed_max = {:?}\nshift_max_s = {:?}\nnoise_max = {:?}\ntarget_length = {}\nseed = {}\n",
            a.speed_min, a.speed_max, a.shift_max, a.noise_max, a.target_length, a.seed
        );
        let _ = writeln!(
            s,
            "[model]\narch = {}\nwidth = {}\nresnet_stem = {}\nresnet_channels = {}\nresnet_repeats = {}\n",
            m.arch.name(),
            m.width,
            m.resnet.stem_channels,
            join(&m.resnet.stage_channels),
            join(&m.resnet.repeats)
        );
        let _ = writeln!(
            s,
            "[train]\nepochs = {}\nbatch_size = {}\nbatches_per_epoch = {}\nlr = {:?}\nbeta1 = {:?}\nbeta2 = {:?}\neps = {:?}\nfold_out = {}\nkeep_best = {}\nstop_at_train_accuracy = {:?}\naugment = {}\n",
            t.epochs, t.batch_size, t.batches_per_epoch, t.lr, t.beta1, t.beta2, t.eps, t.fold_out, t.keep_best,
            t.stop_at_train_accuracy, t.augment
        );
        let _ = writeln!(
            s,
            "[dataset]\nn_folds = {}\nsilence_threshold = {:?}\ncap_silence = {}\n",
            self.n_folds, self.silence_threshold, self.cap_silence
        );
        let _ = write!(s, "[eval]\nunknown_threshold = {:?}\n", self.unknown_threshold);
        s
    }

    /// Writes `effective_config` into `dir`.
    pub fn echo_into(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).at(dir)?;
        let path = dir.join(EFFECTIVE_CONFIG);
        std::fs::write(&path, self.to_text()).at(&path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_valid_and_round_trip() {
        let c = ToolkitConfig::default();
        c.validate().unwrap();
        let mut back = ToolkitConfig::default();
        back.seed = 99;
        back.apply_text(&c.to_text()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn precedence() {
        let mut c = ToolkitConfig::default();
        c.apply_text("# comment\n[train]\nepochs = 3  # trailing\nlr = 0.01\n\n[mel]\nn_mels = 20\n").unwrap();
        assert_eq!((c.train.epochs, c.train.lr, c.features.n_mels), (3, 0.01, 20));
        c.set_dotted("train.epochs=7").unwrap();
        c.set_dotted("seed=5").unwrap();
        assert_eq!((c.train.epochs, c.seed, c.train.lr), (7, 5, 0.01));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let mut c = ToolkitConfig::default();
        match c.apply_text("[train]\nepochs = 2\nbogus = 1\n") {
            Err(Error::Config { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(c.apply_text("[train\n").is_err());
        assert!(c.apply_text("[train]\nepochs\n").is_err());
        assert!(c.apply_text("[train]\nepochs = many\n").is_err());
    }

    #[test]
    fn validation() {
        let mut c = ToolkitConfig::default();
        c.train.batch_size = 30;
        assert!(c.validate().is_err());
        let mut c = ToolkitConfig::default();
        c.model.arch = Arch::Cnn2d;
        c.validate().unwrap();
        assert!(c.validate_model().is_err());
        c.features.representation = Representation::Mel;
        c.validate_model().unwrap();
        assert_eq!(c.model_spec().unwrap().input_shape, vec![1, 40, 98]);
    }
}
