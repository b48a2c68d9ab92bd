import configparser
import os


def parse_int_list(text):
    """
    Parse a comma-separated list of integers such as ``"2,3,4"``.

    Raises
    ------
    ValueError
        If an entry is not an integer or the list is empty.
    """
    entries = [item.strip() for item in str(text).split(",") if item.strip()]
    if not entries:
        raise ValueError(f"Expected a comma-separated list of integers, got '{text}'.")
    return [int(item) for item in entries]


def parse_tolerances(text):
    """
    Parse tolerance overrides written as ``name=value,name=value``.

    Raises
    ------
    ValueError
        If an entry has no ``=`` or its value is not a number.
    """
    overrides = {}
    for item in str(text).split(","):
        item = item.strip()
        if not item:
            continue
        if "=" not in item:
            raise ValueError(f"Tolerance override '{item}' must have the form name=value.")
        name, value = item.split("=", 1)
        overrides[name.strip()] = float(value)
    return overrides


def parse_config_file(config_path):
    """
    Reads a verification configuration file and extracts parameters.

    Parameters
    ----------
    config_path : str
        Path to the .ini configuration file.

    Returns
    -------
    dict
        Typed values from the ``[Suite]`` section, plus a ``tolerances``
        dict when a ``[Tolerances]`` section is present.

    Raises
    ------
    FileNotFoundError
        If the specified config file does not exist.

    """
    if not os.path.exists(config_path):
        raise FileNotFoundError(f"Configuration file '{config_path}' not found.")

    config = configparser.ConfigParser()
    config.read(config_path)
    config_params = {}

    if "Suite" in config:
        section = config["Suite"]
        if "suite" in section:
            config_params["suite"] = section["suite"].strip()
        if "dims" in section:
            config_params["dims"] = parse_int_list(section["dims"])
        if "ranks" in section:
            config_params["ranks"] = parse_int_list(section["ranks"])
        if "samples" in section:
            config_params["samples"] = int(section["samples"])
        if "seed" in section:
            config_params["seed"] = int(section["seed"])
        if "workers" in section:
            config_params["workers"] = int(section["workers"])
        if "cases" in section:
            config_params["cases"] = int(section["cases"])
        if "output" in section:
            config_params["output"] = section["output"].strip()

    if "Tolerances" in config:
        config_params["tolerances"] = {
            name: float(value) for name, value in config["Tolerances"].items()
        }

    return config_params
