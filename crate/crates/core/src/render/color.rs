/// Edge colouring scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ColorMode {
    #[default]
    Grayscale,
    /// Perceptually uniform sequential palette (viridis).
    Viridis,
}

/// Linear darkness for an edge: `min + (1 - min) * weight / max_weight`.
pub fn darkness(weight: u64, max_weight: u64, min_darkness: f64) -> f64 {
    if max_weight == 0 {
        return min_darkness;
    }
    min_darkness + (1.0 - min_darkness) * (weight as f64 / max_weight as f64)
}

// Viridis sampled at nine evenly spaced stops.
const VIRIDIS: [[u8; 3]; 9] = [
    [0x44, 0x01, 0x54],
    [0x47, 0x2d, 0x7b],
    [0x3b, 0x52, 0x8b],
    [0x2c, 0x72, 0x8e],
    [0x21, 0x91, 0x8c],
    [0x28, 0xae, 0x80],
    [0x5e, 0xc9, 0x62],
    [0xad, 0xdc, 0x30],
    [0xfd, 0xe7, 0x25],
];

impl ColorMode {
    /// Hex colour for a darkness in `[0, 1]`; 1 is the darkest.
    pub fn shade(self, darkness: f64) -> String {
        let d = darkness.clamp(0.0, 1.0);
        match self {
            ColorMode::Grayscale => {
                let v = (255.0 * (1.0 - d)).round() as u8;
                format!("#{v:02x}{v:02x}{v:02x}")
            }
            ColorMode::Viridis => {
                // dark purple for heavy edges, yellow for light ones
                let t = (1.0 - d) * (VIRIDIS.len() - 1) as f64;
                let i = (t.floor() as usize).min(VIRIDIS.len() - 2);
                let f = t - i as f64;
                let c: Vec<u8> = (0..3)
                    .map(|k| {
                        let a = VIRIDIS[i][k] as f64;
                        let b = VIRIDIS[i + 1][k] as f64;
                        (a + (b - a) * f).round() as u8
                    })
                    .collect();
                format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
            }
        }
    }
}
