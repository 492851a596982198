use serde::{Deserialize, Serialize};

use super::Candidate;

/// Fixed hyperparameters of the base network and of every appended cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlanConfig {
    /// Side length of the square input image.
    pub input_side: u32,
    pub input_channels: u32,
    pub num_classes: u32,
    pub kernel: u32,
    pub base_filters: u32,
    pub cell_filters: u32,
    pub dense_units: u32,
    pub cell_dropout: f64,
    pub head_dropout: f64,
}

impl Default for PlanConfig {
    fn default() -> Self {
        PlanConfig {
            input_side: 32,
            input_channels: 3,
            num_classes: 10,
            kernel: 3,
            base_filters: 32,
            cell_filters: 64,
            dense_units: 512,
            cell_dropout: 0.2,
            head_dropout: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Layer {
    /// "Same"-padded convolution; keeps the spatial size.
    Conv {
        in_channels: u32,
        filters: u32,
        kernel: u32,
    },
    BatchNorm {
        channels: u32,
    },
    /// 2x2 pooling with stride 2.
    MaxPool,
    Dropout {
        rate: f64,
    },
    Flatten,
    Dense {
        in_units: u64,
        out_units: u64,
    },
}

/// Activation shape flowing between layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Shape {
    Spatial { side: u32, channels: u32 },
    Flat(u64),
}

impl Layer {
    /// Output shape for `input`, or `None` if the layer cannot accept it.
    pub fn output_shape(&self, input: Shape) -> Option<Shape> {
        match (*self, input) {
            (
                Layer::Conv {
                    in_channels,
                    filters,
                    ..
                },
                Shape::Spatial { side, channels },
            ) if in_channels == channels => Some(Shape::Spatial {
                side,
                channels: filters,
            }),
            (Layer::BatchNorm { channels: c }, Shape::Spatial { channels, .. })
                if c == channels =>
            {
                Some(input)
            }
            (Layer::BatchNorm { channels: c }, Shape::Flat(n)) if u64::from(c) == n => Some(input),
            (Layer::MaxPool, Shape::Spatial { side, channels }) if side >= 2 => {
                Some(Shape::Spatial {
                    side: side / 2,
                    channels,
                })
            }
            (Layer::Dropout { .. }, shape) => Some(shape),
            (Layer::Flatten, Shape::Spatial { side, channels }) => Some(Shape::Flat(
                u64::from(side) * u64::from(side) * u64::from(channels),
            )),
            (
                Layer::Dense {
                    in_units,
                    out_units,
                },
                Shape::Flat(n),
            ) if in_units == n => Some(Shape::Flat(out_units)),
            _ => None,
        }
    }

    pub fn param_count(&self) -> u64 {
        match *self {
            Layer::Conv {
                in_channels,
                filters,
                kernel,
            } => {
                let (k, c_in, c_out) = (
                    u64::from(kernel),
                    u64::from(in_channels),
                    u64::from(filters),
                );
                k * k * c_in * c_out + c_out
            }
            // gamma, beta, moving mean, moving variance
            Layer::BatchNorm { channels } => 4 * u64::from(channels),
            Layer::Dense {
                in_units,
                out_units,
            } => in_units * out_units + out_units,
            Layer::MaxPool | Layer::Dropout { .. } | Layer::Flatten => 0,
        }
    }
}

/// A fully resolved layer list for one candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchitecturePlan {
    pub input: Shape,
    pub num_classes: u32,
    pub layers: Vec<Layer>,
    /// One flag per conv cell: whether that cell pools.
    pub pooling_flags: Vec<bool>,
}

impl ArchitecturePlan {
    /// Walks the layer list, returning every intermediate shape (input first).
    /// Fails at the first layer whose input does not chain.
    pub fn shapes(&self) -> Result<Vec<Shape>, usize> {
        let mut shapes = Vec::with_capacity(self.layers.len() + 1);
        let mut current = self.input;
        shapes.push(current);
        for (i, layer) in self.layers.iter().enumerate() {
            current = layer.output_shape(current).ok_or(i)?;
            if let Shape::Spatial { side: 0, .. } = current {
                return Err(i);
            }
            shapes.push(current);
        }
        Ok(shapes)
    }

    pub fn output(&self) -> Option<Shape> {
        self.shapes().ok().and_then(|s| s.last().copied())
    }
}

/// Decides which of `n_cells` consecutive cells pool, starting at spatial
/// size `start_side`. A cell pools (halving the size) while the size is at
/// least 2; once the size drops below 2 pooling is skipped.
pub fn plan_pooling(start_side: u32, n_cells: u32) -> Vec<bool> {
    let mut side = start_side;
    (0..n_cells)
        .map(|_| {
            let pool = side >= 2;
            if pool {
                side /= 2;
            }
            pool
        })
        .collect()
}

/// Base conv block, then the conv cells, flatten, the dense cells and the
/// dropout + softmax head.
pub fn build_plan(candidate: Candidate, config: &PlanConfig) -> ArchitecturePlan {
    let mut layers = Vec::new();
    let mut side = config.input_side;

    layers.push(Layer::Conv {
        in_channels: config.input_channels,
        filters: config.base_filters,
        kernel: config.kernel,
    });
    layers.push(Layer::BatchNorm {
        channels: config.base_filters,
    });
    if plan_pooling(side, 1)[0] {
        layers.push(Layer::MaxPool);
        side /= 2;
    }

    let pooling_flags = plan_pooling(side, candidate.conv_cells);
    let mut channels = config.base_filters;
    for &pool in &pooling_flags {
        layers.push(Layer::Conv {
            in_channels: channels,
            filters: config.cell_filters,
            kernel: config.kernel,
        });
        layers.push(Layer::BatchNorm {
            channels: config.cell_filters,
        });
        if pool {
            layers.push(Layer::MaxPool);
            side /= 2;
        }
        layers.push(Layer::Dropout {
            rate: config.cell_dropout,
        });
        channels = config.cell_filters;
    }

    layers.push(Layer::Flatten);
    let mut units = u64::from(side) * u64::from(side) * u64::from(channels);
    for _ in 0..candidate.dense_cells {
        layers.push(Layer::Dense {
            in_units: units,
            out_units: config.dense_units.into(),
        });
        units = config.dense_units.into();
    }
    layers.push(Layer::Dropout {
        rate: config.head_dropout,
    });
    layers.push(Layer::Dense {
        in_units: units,
        out_units: config.num_classes.into(),
    });

    ArchitecturePlan {
        input: Shape::Spatial {
            side: config.input_side,
            channels: config.input_channels,
        },
        num_classes: config.num_classes,
        layers,
        pooling_flags,
    }
}

/// Total parameters including batch-norm moving statistics.
pub fn count_params(plan: &ArchitecturePlan) -> u64 {
    plan.layers.iter().map(Layer::param_count).sum()
}

/// Millions of parameters, truncated: one decimal at or above one million
/// (`4.2M`), two below it (`0.58M`).
pub fn format_size_millions(n: u64) -> String {
    if n >= 1_000_000 {
        let tenths = n / 100_000;
        format!("{}.{}M", tenths / 10, tenths % 10)
    } else {
        format!("0.{:02}M", n / 10_000)
    }
}
