//! Forecast CSV ingestion.

use std::path::Path;

use gridsched_core::scenario::ForecastSeries;

use crate::error::CliError;

pub const FORECAST_COLUMNS: [&str; 7] =
    ["slot", "price_da", "price_rt", "ambient_c", "irradiance", "wind_mps", "load_kw"];

/// Columns that may not be negative.
const NON_NEGATIVE: [&str; 3] = ["irradiance", "wind_mps", "load_kw"];

pub fn load_forecasts(path: &Path) -> Result<ForecastSeries, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_forecasts(&text, path)
}

pub fn parse_forecasts(text: &str, path: &Path) -> Result<ForecastSeries, CliError> {
    let file = path.to_path_buf();
    let csv_err = |e: csv::Error| CliError::Validation { file: file.clone(), message: e.to_string() };
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = r.headers().map_err(csv_err)?.clone();
    let mut col = [0usize; 7];
    for (i, name) in FORECAST_COLUMNS.iter().enumerate() {
        col[i] = header
            .iter()
            .position(|h| h == *name)
            .ok_or_else(|| CliError::MissingColumn { file: file.clone(), column: name.to_string() })?;
    }
    let mut f = ForecastSeries {
        price_da: Vec::new(),
        price_rt: Vec::new(),
        ambient: Vec::new(),
        irradiance: Vec::new(),
        wind_speed: Vec::new(),
        nonhvac_load: Vec::new(),
    };
    for (row, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let expected = row + 1;
        let raw_slot = &rec[col[0]];
        if raw_slot.parse::<usize>().ok() != Some(expected) {
            return Err(CliError::Sequencing { file: file.clone(), expected, found: raw_slot.to_string() });
        }
        let mut values = [0.0; 6];
        for (k, v) in values.iter_mut().enumerate() {
            let name = FORECAST_COLUMNS[k + 1];
            let raw = &rec[col[k + 1]];
            *v = raw.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| CliError::Validation {
                file: file.clone(),
                message: format!("slot {expected}: `{name}` is not a finite number: {raw:?}"),
            })?;
            if *v < 0.0 && NON_NEGATIVE.contains(&name) {
                return Err(CliError::Validation {
                    file: file.clone(),
                    message: format!("slot {expected}: `{name}` must be non-negative, got {v}"),
                });
            }
        }
        let [da, rt, amb, irr, wind, load] = values;
        f.price_da.push(da);
        f.price_rt.push(rt);
        f.ambient.push(amb);
        f.irradiance.push(irr);
        f.wind_speed.push(wind);
        f.nonhvac_load.push(load);
    }
    if f.slots() == 0 {
        return Err(CliError::Validation { file, message: "forecast has no slots".into() });
    }
    Ok(f)
}
