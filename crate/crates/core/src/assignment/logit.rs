use super::AssignmentError;

/// Multinomial logit choice probabilities for disutilities `utilities`:
/// `p_i = exp(-theta u_i) / sum_j exp(-theta u_j)`.
///
/// Utilities are shifted by their minimum before exponentiation, so large
/// utilities do not underflow.
pub fn logit_probabilities(utilities: &[f64], theta: f64) -> Result<Vec<f64>, AssignmentError> {
    if utilities.is_empty() {
        return Err(AssignmentError::EmptyChoiceSet);
    }
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(AssignmentError::InvalidParameter(format!("theta must be positive, got {theta}")));
    }
    let min = utilities.iter().copied().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = utilities.iter().map(|u| (-theta * (u - min)).exp()).collect();
    let total: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / total).collect())
}

/// Index drawn from `probabilities` with a uniform variate `u` in [0, 1).
pub(crate) fn sample_index(probabilities: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, p) in probabilities.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probabilities.len() - 1
}
