"""ussl-desk: universal semi-supervised learning at desk scale"""

__version__ = "0.1.0"
