import logging
import os
import sys

logger = logging.getLogger()


def setup_logging(output_dir=None, level=logging.INFO):
    log_format = logging.Formatter("%(asctime)s : %(message)s")
    logger = logging.getLogger()
    logger.handlers = []
    if output_dir is not None:
        os.makedirs(output_dir, exist_ok=True)
        file_handler = logging.FileHandler(os.path.join(output_dir, 'output.log'))
        file_handler.setFormatter(log_format)
        logger.addHandler(file_handler)
    err_handler = logging.StreamHandler(sys.stderr)
    err_handler.setFormatter(log_format)
    logger.addHandler(err_handler)
    logger.setLevel(level)

    return logger


def setup_output_dir(path):
    """Create the parent directory of an output file; returns the absolute path."""
    path = os.path.abspath(path)
    os.makedirs(os.path.dirname(path), exist_ok=True)
    return path


def sibling_path(path, suffix):
    root, _ = os.path.splitext(path)
    return root + suffix


def point_seed(seed, index):
    """Entropy for one grid point, independent of scheduling."""
    return [int(seed), int(index)]


def write_text(path, text):
    path = setup_output_dir(path)
    with open(path, 'w', newline='\n') as f:
        f.write(text)
    return path
