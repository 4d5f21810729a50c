//! Offline evaluation: mean Huber loss per sensor configuration.

use crate::models::SteeringStack;
use crate::numerics::{huber_loss, Tensor};
use crate::synthworld::{Sample, WeatherTag};

/// Test-time sensor availability. The unavailable sensor's input is
/// replaced by the all-zero tensor, the same representation a failed
/// sensor feeds during training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SensorConfig {
    BothSensors,
    DepthOnly,
    RgbOnly,
}

impl SensorConfig {
    pub const ALL: [SensorConfig; 3] =
        [SensorConfig::BothSensors, SensorConfig::DepthOnly, SensorConfig::RgbOnly];

    pub fn as_str(&self) -> &'static str {
        match self {
            SensorConfig::BothSensors => "both",
            SensorConfig::DepthOnly => "depth_only",
            SensorConfig::RgbOnly => "rgb_only",
        }
    }

    /// Applies the zeroing contract to one sample's sensor inputs.
    pub fn apply(&self, depth: &Tensor, rgb: &Tensor) -> (Tensor, Tensor) {
        match self {
            SensorConfig::BothSensors => (depth.clone(), rgb.clone()),
            SensorConfig::DepthOnly => (depth.clone(), Tensor::zeros(vec![3, 128, 128])),
            SensorConfig::RgbOnly => (Tensor::zeros(vec![1, 128, 128]), rgb.clone()),
        }
    }
}

/// A steering predictor over raw sensor images.
pub trait SteeringPredictor {
    fn predict_steering(&mut self, depth: &Tensor, rgb: &Tensor) -> f32;
}

impl SteeringPredictor for SteeringStack {
    fn predict_steering(&mut self, depth: &Tensor, rgb: &Tensor) -> f32 {
        self.predict(depth, rgb).0
    }
}

impl<F: FnMut(&Tensor, &Tensor) -> f32> SteeringPredictor for F {
    fn predict_steering(&mut self, depth: &Tensor, rgb: &Tensor) -> f32 {
        self(depth, rgb)
    }
}

/// Mean Huber loss of the predictor over a test set under one sensor
/// configuration.
pub fn evaluate_offline(
    model: &mut dyn SteeringPredictor,
    samples: &[Sample],
    sensor: SensorConfig,
    delta: f32,
) -> f32 {
    assert!(!samples.is_empty(), "evaluation needs a nonempty dataset");
    let mut total = 0.0f64;
    for sample in samples {
        let (depth, rgb) = sensor.apply(&sample.depth, &sample.rgb);
        let pred = model.predict_steering(&depth, &rgb);
        total += huber_loss(pred, sample.steering, delta) as f64;
    }
    (total / samples.len() as f64) as f32
}

/// The 3x2 sensor-configuration x weather loss matrix.
#[derive(Debug, Clone)]
pub struct LossTable {
    /// Rows: BothSensors, DepthOnly, RgbOnly. Columns: TrainClear, ShiftedRain.
    pub mean_huber: [[f32; 2]; 3],
    pub counts: [[usize; 2]; 3],
}

pub const WEATHER_COLUMNS: [WeatherTag; 2] = [WeatherTag::TrainClear, WeatherTag::ShiftedRain];

impl LossTable {
    pub fn get(&self, sensor: SensorConfig, weather: WeatherTag) -> f32 {
        self.mean_huber[Self::row(sensor)][Self::col(weather)]
    }

    fn row(sensor: SensorConfig) -> usize {
        match sensor {
            SensorConfig::BothSensors => 0,
            SensorConfig::DepthOnly => 1,
            SensorConfig::RgbOnly => 2,
        }
    }

    fn col(weather: WeatherTag) -> usize {
        match weather {
            WeatherTag::TrainClear => 0,
            WeatherTag::ShiftedRain => 1,
        }
    }

    /// losses.csv: sensor_config, weather, mean_huber, n.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("sensor_config,weather,mean_huber,n\n");
        for sensor in SensorConfig::ALL {
            for weather in WEATHER_COLUMNS {
                out.push_str(&format!(
                    "{},{},{:.6e},{}\n",
                    sensor.as_str(),
                    weather.as_str(),
                    self.get(sensor, weather),
                    self.counts[Self::row(sensor)][Self::col(weather)],
                ));
            }
        }
        out
    }
}

/// Evaluates the full matrix over the two weather test sets.
pub fn build_loss_table(
    model: &mut dyn SteeringPredictor,
    clear_samples: &[Sample],
    shifted_samples: &[Sample],
    delta: f32,
) -> LossTable {
    let mut mean_huber = [[0.0f32; 2]; 3];
    let mut counts = [[0usize; 2]; 3];
    for sensor in SensorConfig::ALL {
        let row = LossTable::row(sensor);
        mean_huber[row][0] = evaluate_offline(model, clear_samples, sensor, delta);
        counts[row][0] = clear_samples.len();
        mean_huber[row][1] = evaluate_offline(model, shifted_samples, sensor, delta);
        counts[row][1] = shifted_samples.len();
    }
    LossTable { mean_huber, counts }
}

/// Same matrix as [`build_loss_table`] for a [`SteeringStack`], computing
/// each sample's depth features and embedding once instead of once per
/// sensor configuration. The zeroed sensor contributes the same
/// blank-input features the direct path would compute, so the numbers are
/// bit-identical to the reference route.
pub fn build_loss_table_cached(
    stack: &mut SteeringStack,
    clear_samples: &[Sample],
    shifted_samples: &[Sample],
    delta: f32,
) -> LossTable {
    use crate::numerics::huber_loss;

    let blank_features = stack.depth_net.features(&Tensor::zeros(vec![1, 128, 128]));
    let blank_embedding = stack.autoencoder.encode(&Tensor::zeros(vec![3, 128, 128]));

    let mut mean_huber = [[0.0f32; 2]; 3];
    let mut counts = [[0usize; 2]; 3];
    for (col, samples) in [clear_samples, shifted_samples].into_iter().enumerate() {
        let mut totals = [0.0f64; 3];
        for sample in samples {
            let features = stack.depth_net.features(&sample.depth);
            let embedding = stack.autoencoder.encode(&sample.rgb);
            for sensor in SensorConfig::ALL {
                let (f, e) = match sensor {
                    SensorConfig::BothSensors => (&features, &embedding),
                    SensorConfig::DepthOnly => (&features, &blank_embedding),
                    SensorConfig::RgbOnly => (&blank_features, &embedding),
                };
                let (pred, _) = stack.predict_from_features(f, e);
                totals[LossTable::row(sensor)] +=
                    huber_loss(pred, sample.steering, delta) as f64;
            }
        }
        for sensor in SensorConfig::ALL {
            let row = LossTable::row(sensor);
            mean_huber[row][col] = (totals[row] / samples.len() as f64) as f32;
            counts[row][col] = samples.len();
        }
    }
    LossTable { mean_huber, counts }
}
