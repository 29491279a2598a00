"""entroscope: numerical toolkit for entropy inequalities, hypothesis testing,
recovery maps, entropy combination, polarization and Gaussian covariance matrices."""

__version__ = "0.1.0"
