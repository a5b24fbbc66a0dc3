from services.check_interface import CheckInterface


class CheckFactory:
    """
    Registry of verification checks.
    Suites look checks up by name and category.
    """

    # Dictionary of registered checks
    _checks = {}

    @classmethod
    def register_check(cls, check_class):
        """
        Register a check under its `name`

        Args:
            check_class (class): Class implementing CheckInterface
        """
        if not issubclass(check_class, CheckInterface):
            raise TypeError(f"Check must implement CheckInterface: {check_class.__name__}")

        cls._checks[check_class.name.lower()] = check_class
        return check_class

    @classmethod
    def create(cls, check_name, config=None):
        """
        Create an instance of a registered check

        Args:
            check_name (str): Name of the check
            config (dict, optional): Configuration for the check

        Returns:
            CheckInterface: Instance of the check

        Raises:
            ValueError: If the check is not registered
        """
        check_name = check_name.lower()

        if check_name not in cls._checks:
            registered = ", ".join(cls._checks.keys())
            raise ValueError(f"Unsupported check: {check_name}. Supported checks: {registered}")

        if config is None:
            config = {}

        return cls._checks[check_name](config)

    @classmethod
    def get_supported_checks(cls, category=None):
        """
        Get names of registered checks

        Args:
            category (str, optional): "exact" or "numeric"

        Returns:
            list: Check names in registration order
        """
        return [name for name, check in cls._checks.items() if category is None or check.category == category]

    @classmethod
    def is_supported(cls, check_name):
        return check_name.lower() in cls._checks
