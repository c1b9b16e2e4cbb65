//! Spoken reply templates. `**` stands for a temperature and `xxx` for a
//! number of minutes.

use std::collections::BTreeMap;

use thiserror::Error;

pub const CURRENT_TEMP: &str = "CurrentTempIntent";
pub const SET_TARGET_TEMP: &str = "SetTargetTempIntent";
pub const COOK_TIME: &str = "CookTimeIntent";
pub const SET_TARGET_ALARM: &str = "SetTargetAlarmIntent";
/// Template key for an alarm that follows the target rather than a number.
pub const SET_TARGET_ALARM_AT_TARGET: &str = "SetTargetAlarmIntent.at_target";

pub const TEMPERATURE: &str = "**";
pub const MINUTES: &str = "xxx";

pub const HELP: &str = "You can ask me how hot your food is, set a target temperature, \
ask when your food will be ready, or set an alarm for when it is done.";
pub const INDETERMINATE: &str = "I don't have enough readings to predict yet.";
pub const AT_TARGET: &str = "Your food has reached its target temperature.";
pub const NO_READING: &str = "Your thermometer hasn't reported a temperature yet.";
pub const STALE_SUFFIX: &str = " Your thermometer has not reported recently, so this reading may be out of date.";
pub const NO_TARGET: &str = "Please set a target temperature first.";
pub const UNAUTHORIZED: &str = "I couldn't verify your account. Please link your thermometer again.";
pub const UNKNOWN_DEVICE: &str = "Your thermometer isn't connected yet.";
pub const INTERNET_ERROR: &str = "Internet error.";
pub const INTERNAL_ERROR: &str = "Internal error.";
pub const NO_TEMPERATURE_HEARD: &str = "Sorry, I didn't catch the temperature.";

pub fn out_of_range(temp: u32) -> String {
    format!("Sorry, {temp} degrees is outside the thermometer's range of 32 to 572 degrees.")
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RenderError {
    #[error("no reply template for {0}")]
    NoTemplate(String),
    #[error("template {key} needs a value for {placeholder}")]
    MissingValue { key: String, placeholder: &'static str },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResponseTemplates {
    templates: BTreeMap<String, String>,
}

impl Default for ResponseTemplates {
    fn default() -> Self {
        let templates = [
            (CURRENT_TEMP, "Your food is currently at ** degrees Fahrenheit."),
            (SET_TARGET_TEMP, "Ok, your Target Temperature has been set to ** degrees."),
            (
                COOK_TIME,
                "Your thermometer predicts that the time-to-temperature is xxx minutes.",
            ),
            (SET_TARGET_ALARM, "Ok, your temperature alarm is set for ** degrees."),
            (
                SET_TARGET_ALARM_AT_TARGET,
                "Ok, I will notify you when your food is done.",
            ),
        ];
        ResponseTemplates {
            templates: templates
                .into_iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect(),
        }
    }
}

impl ResponseTemplates {
    pub fn contains(&self, key: &str) -> bool {
        self.templates.contains_key(key)
    }

    pub fn render(&self, key: &str, values: &[(&'static str, i64)]) -> Result<String, RenderError> {
        let template = self
            .templates
            .get(key)
            .ok_or_else(|| RenderError::NoTemplate(key.to_string()))?;
        let mut out = template.clone();
        for placeholder in [TEMPERATURE, MINUTES] {
            if !out.contains(placeholder) {
                continue;
            }
            let value = values
                .iter()
                .find(|(p, _)| *p == placeholder)
                .map(|(_, v)| *v)
                .ok_or(RenderError::MissingValue {
                    key: key.to_string(),
                    placeholder,
                })?;
            out = out.replace(placeholder, &value.to_string());
        }
        Ok(out)
    }
}

/// Rounds a reading half-up to the whole degrees that are spoken.
pub fn spoken_degrees(temp_f: f64) -> i64 {
    (temp_f + 0.5).floor() as i64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders() {
        let t = ResponseTemplates::default();
        assert_eq!(
            t.render(CURRENT_TEMP, &[(TEMPERATURE, 120)]).unwrap(),
            "Your food is currently at 120 degrees Fahrenheit."
        );
        assert_eq!(
            t.render(COOK_TIME, &[(MINUTES, 8)]).unwrap(),
            "Your thermometer predicts that the time-to-temperature is 8 minutes."
        );
        assert_eq!(
            t.render(SET_TARGET_ALARM_AT_TARGET, &[]).unwrap(),
            "Ok, I will notify you when your food is done."
        );
        assert_eq!(
            t.render(CURRENT_TEMP, &[(MINUTES, 1)]),
            Err(RenderError::MissingValue {
                key: CURRENT_TEMP.into(),
                placeholder: TEMPERATURE
            })
        );
        assert!(matches!(t.render("Nope", &[]), Err(RenderError::NoTemplate(_))));
    }

    #[test]
    fn rounding_is_half_up() {
        assert_eq!(spoken_degrees(120.3), 120);
        assert_eq!(spoken_degrees(120.5), 121);
        assert_eq!(spoken_degrees(134.7), 135);
        assert_eq!(spoken_degrees(120.49), 120);
    }
}
