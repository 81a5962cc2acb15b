use crate::error::Result;
use crate::plant::GRAVITY;
use crate::signal::{Unit, Waveform};

/// Sensor-to-force-frame rotation `R_y(180°)·R_x(155°)`.
pub fn alignment_matrix() -> [[f64; 3]; 3] {
    let (sx, cx) = 155f64.to_radians().sin_cos();
    let (sy, cy) = 180f64.to_radians().sin_cos();
    let rx = [[1.0, 0.0, 0.0], [0.0, cx, -sx], [0.0, sx, cx]];
    let ry = [[cy, 0.0, sy], [0.0, 1.0, 0.0], [-sy, 0.0, cy]];
    let mut r = [[0.0; 3]; 3];
    for (i, row) in r.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = (0..3).map(|k| ry[i][k] * rx[k][j]).sum();
        }
    }
    r
}

/// Rotates raw accelerometer axes (in g) into the force-sensor frame and
/// converts them to m/s².
pub fn align_accelerometer(
    ax: &Waveform,
    ay: &Waveform,
    az: &Waveform,
) -> Result<(Waveform, Waveform, Waveform)> {
    ax.ensure_compatible(ay)?;
    ax.ensure_compatible(az)?;
    let r = alignment_matrix();
    let n = ax.len();
    let mut out = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    for i in 0..n {
        let v = [ax.samples()[i], ay.samples()[i], az.samples()[i]];
        for (row, channel) in r.iter().zip(out.iter_mut()) {
            channel[i] = GRAVITY * (row[0] * v[0] + row[1] * v[1] + row[2] * v[2]);
        }
    }
    let [x, y, z] = out;
    let rate = ax.rate();
    Ok((
        Waveform::new(x, rate, Unit::MeterPerSecondSquared)?,
        Waveform::new(y, rate, Unit::MeterPerSecondSquared)?,
        Waveform::new(z, rate, Unit::MeterPerSecondSquared)?,
    ))
}
